#include summer6.h
