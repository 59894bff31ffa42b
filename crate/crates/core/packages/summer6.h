* Harmonic sums in the integer index notation: S(R(m1,...,mk),N).
#ifndef SUMMER6H
#define SUMMER6H "1"
Symbols N,n,bsa1,bsb1,bsnn;
CFunctions S,R,bsStuf;
*
* The product of two sums with the same argument becomes a sum of single
* sums of the combined weight.
*
#procedure basis(SS)
repeat;
    id,once `SS'(R(?a),bsnn?)*`SS'(R(?b),bsnn?) = bsStuf(R(?a),R(?b),R,bsnn);
    repeat;
        id bsStuf(R,R(?b),R(?c),bsnn?) = `SS'(R(?c,?b),bsnn);
        id bsStuf(R(?a),R,R(?c),bsnn?) = `SS'(R(?c,?a),bsnn);
        id bsStuf(R(bsa1?,?a),R(bsb1?,?b),R(?c),bsnn?) =
            bsStuf(R(?a),R(bsb1,?b),R(?c,bsa1),bsnn)
          + bsStuf(R(bsa1,?a),R(?b),R(?c,bsb1),bsnn)
          - bsStuf(R(?a),R(?b),R(?c,sig_(bsa1)*sig_(bsb1)*(abs_(bsa1)+abs_(bsb1))),bsnn);
    endrepeat;
endrepeat;
#endprocedure
#endif
