* Harmonic polylogarithms in the 0,1,-1 index notation: H(R(m1,...,mw),x).
#ifndef HARMPOLH
#define HARMPOLH "1"
#include summer6.h
Symbols x,hbm1,hbm2,hbn;
CFunctions H,hbShuf;
*
* Indices are first brought to the 0,1,-1 notation, then products of two
* polylogarithms with the same argument are shuffled.
*
#procedure hbasis(HH,xx)
repeat id `HH'(R(?a,hbn?!{1,0,-1},?b),`xx') = `HH'(R(?a,0,hbn-sig_(hbn),?b),`xx');
repeat;
    id,once `HH'(R(?a),`xx')*`HH'(R(?b),`xx') = hbShuf(R(?a),R(?b),R,`xx');
    repeat;
        id hbShuf(R,R(?b),R(?c),`xx') = `HH'(R(?c,?b),`xx');
        id hbShuf(R(?a),R,R(?c),`xx') = `HH'(R(?c,?a),`xx');
        id hbShuf(R(hbm1?,?a),R(hbm2?,?b),R(?c),`xx') =
            hbShuf(R(?a),R(hbm2,?b),R(?c,hbm1),`xx')
          + hbShuf(R(hbm1,?a),R(?b),R(?c,hbm2),`xx');
    endrepeat;
endrepeat;
#endprocedure
#endif
