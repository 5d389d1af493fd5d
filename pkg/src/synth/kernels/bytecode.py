"""Postfix bytecode for complete programs.

Code is a flat int64 array of ``(opcode, operand)`` pairs.  Every value is a
double; booleans are 0.0/1.0 and NaN marks a row on which some strictly
evaluated intermediate was non-finite.  ``if`` is a three-operand select:
the untaken branch may be NaN without poisoning the row, which gives the same
observable result as lazy evaluation.

Subtrees whose values are already known can be referenced through *slots*:
a mapping ``id(node) -> row`` of a ``(n_slots, n_rows)`` matrix.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from ..lang import Dsl, Hole, Input, Prim, Reuse, Term, apply_spine, spine

OP_CONST = 0
OP_INPUT = 1
OP_SLOT = 2
OP_ADD = 3
OP_SUB = 4
OP_MUL = 5
OP_GT = 6
OP_AND = 7
OP_XOR = 8
OP_NOT = 9
OP_NEG = 10
OP_SQR = 11
OP_SIGN = 12
OP_COS = 13
OP_EXP = 14
OP_IF = 15

BINARY = {"add": OP_ADD, "sub": OP_SUB, "mul": OP_MUL, "gt": OP_GT, "and": OP_AND, "xor": OP_XOR}
UNARY = {"not": OP_NOT, "neg": OP_NEG, "sqr": OP_SQR, "sign": OP_SIGN, "cos": OP_COS, "exp": OP_EXP}

OP_NAMES = {v: k for k, v in globals().items() if k.startswith("OP_")}


class CompileError(ValueError):
    pass


class Compiler:
    """Compiles terms over one DSL; constants are interned in first-use order."""

    def __init__(self, dsl: Dsl):
        self.dsl = dsl
        self._const_index: dict[str, int] = {}
        self.consts: list[float] = []
        for e in dsl:
            if e.is_const:
                self._const_index[e.name] = len(self.consts)
                v = e.value
                self.consts.append(float(v) if not isinstance(v, bool) else (1.0 if v else 0.0))
        self._consts_arr = np.array(self.consts, dtype=np.float64)

    def consts_array(self) -> np.ndarray:
        return self._consts_arr

    def compile(self, t: Term, slots: Optional[dict] = None) -> list[int]:
        out: list[int] = []
        self._emit(t, slots, out)
        return out

    def _emit(self, t: Term, slots: Optional[dict], out: list) -> None:
        if slots is not None:
            k = slots.get(id(t))
            if k is not None:
                out.append(OP_SLOT)
                out.append(k)
                return
        head, args = spine(t)
        th = type(head)
        if th is Reuse:
            self._emit(apply_spine(head.expr, args) if args else head.expr, slots, out)
            return
        if th is Input:
            if args:
                raise CompileError("input variables cannot be applied")
            out.append(OP_INPUT)
            out.append(head.index)
            return
        if th is Hole:
            raise CompileError("cannot compile a program with holes")
        if th is not Prim:
            raise CompileError(f"unexpected head {head!r}")
        e = self.dsl[head.name]
        if e.is_const:
            if args:
                raise CompileError(f"constant {e.name} cannot be applied")
            out.append(OP_CONST)
            out.append(self._const_index[e.name])
            return
        b = e.builtin
        if b == "if":
            if len(args) < 3:
                raise CompileError("partially applied 'if' in value position")
            extra = args[3:]
            self._emit(args[0], slots, out)
            self._emit(apply_spine(args[1], extra) if extra else args[1], slots, out)
            self._emit(apply_spine(args[2], extra) if extra else args[2], slots, out)
            out.append(OP_IF)
            out.append(0)
            return
        if b == "id":
            if not args:
                raise CompileError("unapplied 'id' in value position")
            self._emit(apply_spine(args[0], args[1:]) if len(args) > 1 else args[0], slots, out)
            return
        if b in BINARY:
            if len(args) != 2:
                raise CompileError(f"{b} needs exactly 2 arguments, got {len(args)}")
            self._emit(args[0], slots, out)
            self._emit(args[1], slots, out)
            out.append(BINARY[b])
            out.append(0)
            return
        if b in UNARY:
            if len(args) != 1:
                raise CompileError(f"{b} needs exactly 1 argument, got {len(args)}")
            self._emit(args[0], slots, out)
            out.append(UNARY[b])
            out.append(0)
            return
        raise CompileError(f"no bytecode for builtin {b!r}")


def disassemble(code) -> list[str]:
    out = []
    for i in range(0, len(code), 2):
        op, arg = int(code[i]), int(code[i + 1])
        name = OP_NAMES.get(op, f"?{op}")[3:]
        out.append(f"{name} {arg}" if op in (OP_CONST, OP_INPUT, OP_SLOT) else name)
    return out


def max_stack(code) -> int:
    depth = best = 0
    for i in range(0, len(code), 2):
        op = int(code[i])
        if op in (OP_CONST, OP_INPUT, OP_SLOT):
            depth += 1
        elif op == OP_IF:
            depth -= 2
        elif op in BINARY.values():
            depth -= 1
        best = max(best, depth)
    return best
