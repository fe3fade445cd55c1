"""RV32IM subset: decode, encode, one-macro-cycle execution, baseline cost model.

Supported set: the RV32I base integer instructions minus FENCE/ECALL/EBREAK/CSR,
plus the full M extension. Division is multi-cycle (one quotient bit per
macro-cycle); everything else completes in one macro-cycle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

M32 = 0xFFFFFFFF

# Multi-cycle divider: one quotient bit per macro-cycle.
DIV_LATENCY = 32

# Cost model of the original 3-stage in-order core (no barrel).
BRANCH_PENALTY = 2      # pipeline flush on a taken branch or jump
LOAD_USE_PENALTY = 1    # bubble when the next instruction consumes a load


def sext(value: int, bits: int) -> int:
    """Sign-extend `bits`-wide value to a Python int."""
    if value & (1 << (bits - 1)):
        return value - (1 << bits)
    return value


def to_signed(v: int) -> int:
    return v - 0x100000000 if v & 0x80000000 else v


class MemFault(Exception):
    """Raised by a memory interface for an access that cannot be mapped."""


OPC_LUI = 0x37
OPC_AUIPC = 0x17
OPC_JAL = 0x6F
OPC_JALR = 0x67
OPC_BRANCH = 0x63
OPC_LOAD = 0x03
OPC_STORE = 0x23
OPC_OP_IMM = 0x13
OPC_OP = 0x33

# kind -> (funct3, funct7) for R-type; funct7 0x01 selects the M extension
_R_FUNCT = {
    "add": (0, 0x00), "sub": (0, 0x20), "sll": (1, 0x00), "slt": (2, 0x00),
    "sltu": (3, 0x00), "xor": (4, 0x00), "srl": (5, 0x00), "sra": (5, 0x20),
    "or": (6, 0x00), "and": (7, 0x00),
    "mul": (0, 0x01), "mulh": (1, 0x01), "mulhsu": (2, 0x01), "mulhu": (3, 0x01),
    "div": (4, 0x01), "divu": (5, 0x01), "rem": (6, 0x01), "remu": (7, 0x01),
}
_R_BY_FUNCT = {v: k for k, v in _R_FUNCT.items()}

_I_FUNCT = {"addi": 0, "slti": 2, "sltiu": 3, "xori": 4, "ori": 6, "andi": 7}
_I_BY_FUNCT = {v: k for k, v in _I_FUNCT.items()}

_LOAD_FUNCT = {"lb": 0, "lh": 1, "lw": 2, "lbu": 4, "lhu": 5}
_LOAD_BY_FUNCT = {v: k for k, v in _LOAD_FUNCT.items()}

_STORE_FUNCT = {"sb": 0, "sh": 1, "sw": 2}
_STORE_BY_FUNCT = {v: k for k, v in _STORE_FUNCT.items()}

_BRANCH_FUNCT = {"beq": 0, "bne": 1, "blt": 4, "bge": 5, "bltu": 6, "bgeu": 7}
_BRANCH_BY_FUNCT = {v: k for k, v in _BRANCH_FUNCT.items()}

LOAD_KINDS = frozenset(_LOAD_FUNCT)
STORE_KINDS = frozenset(_STORE_FUNCT)
BRANCH_KINDS = frozenset(_BRANCH_FUNCT)
JUMP_KINDS = frozenset({"jal", "jalr"})
DIV_KINDS = frozenset({"div", "divu", "rem", "remu"})
MUL_KINDS = frozenset({"mul", "mulh", "mulhsu", "mulhu"})

_LOAD_WIDTH = {"lb": 1, "lbu": 1, "lh": 2, "lhu": 2, "lw": 4}
_STORE_WIDTH = {"sb": 1, "sh": 2, "sw": 4}


@dataclass(slots=True)
class Instruction:
    kind: str               # lowercase mnemonic, or "illegal"
    rd: int = 0
    rs1: int = 0
    rs2: int = 0
    imm: int = 0
    word: int = 0

    @property
    def illegal(self) -> bool:
        return self.kind == "illegal"


def decode(word: int) -> Instruction:
    """Decode a 32-bit word; unsupported encodings yield kind="illegal"."""
    word &= M32
    opc = word & 0x7F
    rd = (word >> 7) & 0x1F
    funct3 = (word >> 12) & 0x7
    rs1 = (word >> 15) & 0x1F
    rs2 = (word >> 20) & 0x1F
    funct7 = (word >> 25) & 0x7F

    if opc == OPC_LUI:
        return Instruction("lui", rd=rd, imm=word & 0xFFFFF000, word=word)
    if opc == OPC_AUIPC:
        return Instruction("auipc", rd=rd, imm=word & 0xFFFFF000, word=word)
    if opc == OPC_JAL:
        imm = sext(((word >> 31) << 20) | (((word >> 12) & 0xFF) << 12)
                   | (((word >> 20) & 1) << 11) | (((word >> 21) & 0x3FF) << 1), 21)
        return Instruction("jal", rd=rd, imm=imm, word=word)
    if opc == OPC_JALR and funct3 == 0:
        return Instruction("jalr", rd=rd, rs1=rs1, imm=sext(word >> 20, 12), word=word)
    if opc == OPC_BRANCH:
        kind = _BRANCH_BY_FUNCT.get(funct3)
        if kind is None:
            return Instruction("illegal", word=word)
        imm = sext(((word >> 31) << 12) | (((word >> 7) & 1) << 11)
                   | (((word >> 25) & 0x3F) << 5) | (((word >> 8) & 0xF) << 1), 13)
        return Instruction(kind, rs1=rs1, rs2=rs2, imm=imm, word=word)
    if opc == OPC_LOAD:
        kind = _LOAD_BY_FUNCT.get(funct3)
        if kind is None:
            return Instruction("illegal", word=word)
        return Instruction(kind, rd=rd, rs1=rs1, imm=sext(word >> 20, 12), word=word)
    if opc == OPC_STORE:
        kind = _STORE_BY_FUNCT.get(funct3)
        if kind is None:
            return Instruction("illegal", word=word)
        imm = sext((funct7 << 5) | rd, 12)
        return Instruction(kind, rs1=rs1, rs2=rs2, imm=imm, word=word)
    if opc == OPC_OP_IMM:
        if funct3 == 1:
            if funct7 != 0x00:
                return Instruction("illegal", word=word)
            return Instruction("slli", rd=rd, rs1=rs1, imm=rs2, word=word)
        if funct3 == 5:
            if funct7 == 0x00:
                return Instruction("srli", rd=rd, rs1=rs1, imm=rs2, word=word)
            if funct7 == 0x20:
                return Instruction("srai", rd=rd, rs1=rs1, imm=rs2, word=word)
            return Instruction("illegal", word=word)
        kind = _I_BY_FUNCT.get(funct3)
        if kind is None:
            return Instruction("illegal", word=word)
        return Instruction(kind, rd=rd, rs1=rs1, imm=sext(word >> 20, 12), word=word)
    if opc == OPC_OP:
        kind = _R_BY_FUNCT.get((funct3, funct7))
        if kind is None:
            return Instruction("illegal", word=word)
        return Instruction(kind, rd=rd, rs1=rs1, rs2=rs2, word=word)
    return Instruction("illegal", word=word)


def encode(instr: Instruction) -> int:
    """Re-encode a decoded instruction; inverse of decode for the supported set."""
    k = instr.kind
    if k == "lui":
        return (instr.imm & 0xFFFFF000) | (instr.rd << 7) | OPC_LUI
    if k == "auipc":
        return (instr.imm & 0xFFFFF000) | (instr.rd << 7) | OPC_AUIPC
    if k == "jal":
        imm = instr.imm & 0x1FFFFF
        return ((imm >> 20) << 31) | (((imm >> 1) & 0x3FF) << 21) \
            | (((imm >> 11) & 1) << 20) | (((imm >> 12) & 0xFF) << 12) \
            | (instr.rd << 7) | OPC_JAL
    if k == "jalr":
        return ((instr.imm & 0xFFF) << 20) | (instr.rs1 << 15) | (instr.rd << 7) | OPC_JALR
    if k in _BRANCH_FUNCT:
        imm = instr.imm & 0x1FFF
        return ((imm >> 12) << 31) | (((imm >> 5) & 0x3F) << 25) | (instr.rs2 << 20) \
            | (instr.rs1 << 15) | (_BRANCH_FUNCT[k] << 12) \
            | (((imm >> 1) & 0xF) << 8) | (((imm >> 11) & 1) << 7) | OPC_BRANCH
    if k in _LOAD_FUNCT:
        return ((instr.imm & 0xFFF) << 20) | (instr.rs1 << 15) \
            | (_LOAD_FUNCT[k] << 12) | (instr.rd << 7) | OPC_LOAD
    if k in _STORE_FUNCT:
        imm = instr.imm & 0xFFF
        return ((imm >> 5) << 25) | (instr.rs2 << 20) | (instr.rs1 << 15) \
            | (_STORE_FUNCT[k] << 12) | ((imm & 0x1F) << 7) | OPC_STORE
    if k == "slli":
        return (instr.imm << 20) | (instr.rs1 << 15) | (1 << 12) | (instr.rd << 7) | OPC_OP_IMM
    if k == "srli":
        return (instr.imm << 20) | (instr.rs1 << 15) | (5 << 12) | (instr.rd << 7) | OPC_OP_IMM
    if k == "srai":
        return (0x20 << 25) | (instr.imm << 20) | (instr.rs1 << 15) | (5 << 12) \
            | (instr.rd << 7) | OPC_OP_IMM
    if k in _I_FUNCT:
        return ((instr.imm & 0xFFF) << 20) | (instr.rs1 << 15) \
            | (_I_FUNCT[k] << 12) | (instr.rd << 7) | OPC_OP_IMM
    if k in _R_FUNCT:
        funct3, funct7 = _R_FUNCT[k]
        return (funct7 << 25) | (instr.rs2 << 20) | (instr.rs1 << 15) \
            | (funct3 << 12) | (instr.rd << 7) | OPC_OP
    raise ValueError(f"cannot encode {k!r}")


@dataclass(slots=True)
class DivState:
    """In-progress multi-cycle division."""
    dividend: int
    divisor: int
    steps_remaining: int
    dest_reg: int
    op_kind: str


@dataclass(slots=True)
class ArchState:
    """Architectural state of one thread (the context memory entry)."""
    regs: list[int]
    pc: int = 0
    div_state: Optional[DivState] = None

    @classmethod
    def fresh(cls, pc: int = 0) -> "ArchState":
        return cls(regs=[0] * 32, pc=pc)


@dataclass(slots=True)
class MemOp:
    kind: str       # "load" | "store"
    address: int
    width: int
    store_value: int = 0
    dest_reg: int = 0


@dataclass(slots=True)
class ExecEffect:
    """Result of one macro-cycle; applied to the context at commit time."""
    next_pc: int
    reg_write: Optional[tuple[int, int]] = None
    mem_op: Optional[MemOp] = None
    completed: bool = True
    trap: Optional[str] = None
    div_start: Optional[DivState] = None
    div_clear: bool = False


def _trap(state: ArchState, reason: str) -> ExecEffect:
    return ExecEffect(next_pc=state.pc, completed=True, trap=reason)


def _div_result(d: DivState) -> int:
    a, b, k = d.dividend, d.divisor, d.op_kind
    if k == "divu":
        return M32 if b == 0 else (a // b) & M32
    if k == "remu":
        return a if b == 0 else (a % b) & M32
    sa, sb = to_signed(a), to_signed(b)
    if k == "div":
        if sb == 0:
            return M32
        if sa == -0x80000000 and sb == -1:
            return 0x80000000
        return (abs(sa) // abs(sb) * (1 if (sa < 0) == (sb < 0) else -1)) & M32
    # rem
    if sb == 0:
        return a
    if sa == -0x80000000 and sb == -1:
        return 0
    q = abs(sa) // abs(sb) * (1 if (sa < 0) == (sb < 0) else -1)
    return (sa - sb * q) & M32


def step_macro(state: ArchState, instr: Instruction, mem) -> ExecEffect:
    """Execute one macro-cycle against `mem` (load(addr, width)/store(addr, width, value)).

    A pending division consumes the cycle regardless of `instr`. The returned
    effect is not applied to `state`; callers commit it via apply_effect.
    """
    if state.div_state is not None:
        d = state.div_state
        if d.steps_remaining > 1:
            return ExecEffect(next_pc=state.pc, completed=False,
                              div_start=DivState(d.dividend, d.divisor,
                                                 d.steps_remaining - 1, d.dest_reg, d.op_kind))
        return ExecEffect(next_pc=(state.pc + 4) & M32, completed=True,
                          reg_write=(d.dest_reg, _div_result(d)), div_clear=True)

    if instr.illegal:
        return _trap(state, "illegal")

    k = instr.kind
    regs = state.regs
    pc = state.pc
    seq_pc = (pc + 4) & M32

    if k in _ALU_OPS:
        return ExecEffect(next_pc=seq_pc, reg_write=(instr.rd, _ALU_OPS[k](regs, instr)))

    if k in DIV_KINDS:
        return ExecEffect(next_pc=pc, completed=False,
                          div_start=DivState(regs[instr.rs1], regs[instr.rs2],
                                             DIV_LATENCY - 1, instr.rd, k))

    if k in _LOAD_WIDTH:
        width = _LOAD_WIDTH[k]
        addr = (regs[instr.rs1] + instr.imm) & M32
        if addr & (width - 1):
            return _trap(state, "misaligned_load")
        try:
            raw = mem.load(addr, width)
        except MemFault as e:
            return _trap(state, f"fault:{e}")
        if k == "lb":
            raw = sext(raw, 8) & M32
        elif k == "lh":
            raw = sext(raw, 16) & M32
        return ExecEffect(next_pc=seq_pc, reg_write=(instr.rd, raw),
                          mem_op=MemOp("load", addr, width, dest_reg=instr.rd))

    if k in _STORE_WIDTH:
        width = _STORE_WIDTH[k]
        addr = (regs[instr.rs1] + instr.imm) & M32
        if addr & (width - 1):
            return _trap(state, "misaligned_store")
        value = regs[instr.rs2] & ((1 << (8 * width)) - 1)
        try:
            mem.store(addr, width, value)
        except MemFault as e:
            return _trap(state, f"fault:{e}")
        return ExecEffect(next_pc=seq_pc, mem_op=MemOp("store", addr, width, store_value=value))

    if k in _BRANCH_FUNCT:
        taken = _BRANCH_TESTS[k](regs[instr.rs1], regs[instr.rs2])
        if not taken:
            return ExecEffect(next_pc=seq_pc)
        target = (pc + instr.imm) & M32
        if target & 3:
            return _trap(state, "misaligned_fetch")
        return ExecEffect(next_pc=target)

    if k == "jal":
        target = (pc + instr.imm) & M32
        if target & 3:
            return _trap(state, "misaligned_fetch")
        return ExecEffect(next_pc=target, reg_write=(instr.rd, seq_pc))
    if k == "jalr":
        target = (regs[instr.rs1] + instr.imm) & M32 & ~1
        if target & 3:
            return _trap(state, "misaligned_fetch")
        return ExecEffect(next_pc=target, reg_write=(instr.rd, seq_pc))
    if k == "lui":
        return ExecEffect(next_pc=seq_pc, reg_write=(instr.rd, instr.imm))
    if k == "auipc":
        return ExecEffect(next_pc=seq_pc, reg_write=(instr.rd, (pc + instr.imm) & M32))

    return _trap(state, "illegal")


_BRANCH_TESTS = {
    "beq": lambda a, b: a == b,
    "bne": lambda a, b: a != b,
    "blt": lambda a, b: to_signed(a) < to_signed(b),
    "bge": lambda a, b: to_signed(a) >= to_signed(b),
    "bltu": lambda a, b: a < b,
    "bgeu": lambda a, b: a >= b,
}

_ALU_OPS = {
    "addi": lambda r, i: (r[i.rs1] + i.imm) & M32,
    "slti": lambda r, i: int(to_signed(r[i.rs1]) < i.imm),
    "sltiu": lambda r, i: int(r[i.rs1] < (i.imm & M32)),
    "xori": lambda r, i: (r[i.rs1] ^ i.imm) & M32,
    "ori": lambda r, i: (r[i.rs1] | i.imm) & M32,
    "andi": lambda r, i: (r[i.rs1] & i.imm) & M32,
    "slli": lambda r, i: (r[i.rs1] << i.imm) & M32,
    "srli": lambda r, i: r[i.rs1] >> i.imm,
    "srai": lambda r, i: (to_signed(r[i.rs1]) >> i.imm) & M32,
    "add": lambda r, i: (r[i.rs1] + r[i.rs2]) & M32,
    "sub": lambda r, i: (r[i.rs1] - r[i.rs2]) & M32,
    "sll": lambda r, i: (r[i.rs1] << (r[i.rs2] & 31)) & M32,
    "slt": lambda r, i: int(to_signed(r[i.rs1]) < to_signed(r[i.rs2])),
    "sltu": lambda r, i: int(r[i.rs1] < r[i.rs2]),
    "xor": lambda r, i: r[i.rs1] ^ r[i.rs2],
    "srl": lambda r, i: r[i.rs1] >> (r[i.rs2] & 31),
    "sra": lambda r, i: (to_signed(r[i.rs1]) >> (r[i.rs2] & 31)) & M32,
    "or": lambda r, i: r[i.rs1] | r[i.rs2],
    "and": lambda r, i: r[i.rs1] & r[i.rs2],
    "mul": lambda r, i: (r[i.rs1] * r[i.rs2]) & M32,
    "mulh": lambda r, i: ((to_signed(r[i.rs1]) * to_signed(r[i.rs2])) >> 32) & M32,
    "mulhsu": lambda r, i: ((to_signed(r[i.rs1]) * r[i.rs2]) >> 32) & M32,
    "mulhu": lambda r, i: ((r[i.rs1] * r[i.rs2]) >> 32) & M32,
}


def apply_effect(state: ArchState, effect: ExecEffect) -> None:
    """Commit an effect to the context. Trapping effects must not be applied."""
    if effect.trap is not None:
        raise ValueError("cannot apply a trapping effect")
    if effect.reg_write is not None:
        idx, value = effect.reg_write
        if idx != 0:
            state.regs[idx] = value & M32
    state.pc = effect.next_pc
    if effect.div_clear:
        state.div_state = None
    elif effect.div_start is not None:
        state.div_state = effect.div_start


def baseline_cost(instr: Instruction, branch_taken: bool = False,
                  load_use_hazard: bool = False) -> int:
    """Macro-cycles charged by the original 3-stage core for one instruction."""
    if instr.kind in DIV_KINDS:
        return DIV_LATENCY
    cost = 1
    if branch_taken:
        cost += BRANCH_PENALTY
    if load_use_hazard:
        cost += LOAD_USE_PENALTY
    return cost


class FlatMemory:
    """Plain byte-addressed RAM implementing the load/store interface."""

    def __init__(self, size: int):
        self.size = size
        self.data = bytearray(size)

    def load(self, addr: int, width: int) -> int:
        if addr + width > self.size:
            raise MemFault(f"load @0x{addr:08x} out of range")
        return int.from_bytes(self.data[addr:addr + width], "little")

    def store(self, addr: int, width: int, value: int) -> None:
        if addr + width > self.size:
            raise MemFault(f"store @0x{addr:08x} out of range")
        self.data[addr:addr + width] = (value & ((1 << (8 * width)) - 1)).to_bytes(width, "little")

    def load_words(self, addr: int, words: list[int]) -> None:
        for i, w in enumerate(words):
            self.store(addr + 4 * i, 4, w)


class BaselineRunner:
    """Runs a program on the original core's cost model.

    Charges baseline_cost per retired instruction; a jump to itself halts.
    Jumps count as taken branches, and a load followed immediately by a
    consumer of its destination register pays the load-use bubble.
    """

    def __init__(self, mem: FlatMemory, pc: int = 0):
        self.mem = mem
        self.state = ArchState.fresh(pc)
        self.cycles = 0
        self.instructions = 0
        self._decode_cache: dict[int, Instruction] = {}
        self._prev_load_rd = 0

    def _fetch(self) -> Instruction:
        word = self.mem.load(self.state.pc, 4)
        instr = self._decode_cache.get(word)
        if instr is None:
            instr = decode(word)
            self._decode_cache[word] = instr
        return instr

    def step(self) -> bool:
        """Retire one instruction. Returns False on halt (self-jump) or trap."""
        st = self.state
        instr = self._fetch()
        if instr.illegal:
            return False
        effect = step_macro(st, instr, self.mem)
        while not effect.completed:                 # multi-cycle division
            apply_effect(st, effect)
            effect = step_macro(st, instr, self.mem)
        if effect.trap is not None:
            return False
        k = instr.kind
        taken = k in JUMP_KINDS or (k in BRANCH_KINDS and effect.next_pc != (st.pc + 4) & M32)
        uses = ((k not in ("lui", "auipc", "jal")) and instr.rs1 == self._prev_load_rd) or \
               ((k in _R_FUNCT or k in BRANCH_KINDS or k in STORE_KINDS)
                and instr.rs2 == self._prev_load_rd)
        hazard = self._prev_load_rd != 0 and uses
        halted = effect.next_pc == st.pc
        apply_effect(st, effect)
        self.cycles += baseline_cost(instr, branch_taken=taken, load_use_hazard=hazard)
        self.instructions += 1
        self._prev_load_rd = instr.rd if k in LOAD_KINDS else 0
        return not halted

    def run(self, max_instructions: int = 10_000_000) -> int:
        """Run until halt; returns total macro-cycles charged."""
        for _ in range(max_instructions):
            if not self.step():
                return self.cycles
        raise RuntimeError("baseline run exceeded instruction limit")
