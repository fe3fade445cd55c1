"""Independent RV32IM reference interpreter used as a differential oracle.

Written directly from the ISA bit layouts, with no imports from the package
under test. Executes whole instructions (division completes in one call).
State: 32 regs (unsigned ints), pc, and a sparse byte memory dict.
"""

MASK32 = (1 << 32) - 1


def _s32(v):
    return v - (1 << 32) if v & (1 << 31) else v


def _sx(v, bits):
    return v - (1 << bits) if v & (1 << (bits - 1)) else v


class RefHalt(Exception):
    """Raised on illegal instruction, misaligned access, or unmapped memory."""


class RefCore:
    def __init__(self, mem_size=0x10000):
        self.regs = [0] * 32
        self.pc = 0
        self.mem = bytearray(mem_size)
        self.mem_size = mem_size

    def _rd_mem(self, addr, n):
        if addr < 0 or addr + n > self.mem_size:
            raise RefHalt("mem out of range")
        return int.from_bytes(self.mem[addr:addr + n], "little")

    def _wr_mem(self, addr, n, val):
        if addr < 0 or addr + n > self.mem_size:
            raise RefHalt("mem out of range")
        self.mem[addr:addr + n] = (val & ((1 << (8 * n)) - 1)).to_bytes(n, "little")

    def _set(self, rd, val):
        if rd:
            self.regs[rd] = val & MASK32

    def step(self):
        """Execute exactly one whole instruction at pc."""
        if self.pc & 3:
            raise RefHalt("pc misaligned")
        w = self._rd_mem(self.pc, 4)
        opc = w & 0x7F
        rd = (w >> 7) & 0x1F
        f3 = (w >> 12) & 0x7
        rs1v = self.regs[(w >> 15) & 0x1F]
        rs2v = self.regs[(w >> 20) & 0x1F]
        f7 = w >> 25
        imm_i = _sx(w >> 20, 12)
        nxt = (self.pc + 4) & MASK32

        if opc == 0x37:                                   # LUI
            self._set(rd, w & 0xFFFFF000)
        elif opc == 0x17:                                 # AUIPC
            self._set(rd, self.pc + (w & 0xFFFFF000))
        elif opc == 0x6F:                                 # JAL
            off = _sx(((w >> 31) << 20) | (((w >> 12) & 0xFF) << 12)
                      | (((w >> 20) & 1) << 11) | (((w >> 21) & 0x3FF) << 1), 21)
            tgt = (self.pc + off) & MASK32
            if tgt & 3:
                raise RefHalt("jump target misaligned")
            self._set(rd, nxt)
            nxt = tgt
        elif opc == 0x67 and f3 == 0:                     # JALR
            tgt = (rs1v + imm_i) & MASK32 & ~1
            if tgt & 3:
                raise RefHalt("jump target misaligned")
            self._set(rd, nxt)
            nxt = tgt
        elif opc == 0x63:                                 # branches
            off = _sx(((w >> 31) << 12) | (((w >> 7) & 1) << 11)
                      | (((w >> 25) & 0x3F) << 5) | (((w >> 8) & 0xF) << 1), 13)
            if f3 == 0:
                take = rs1v == rs2v
            elif f3 == 1:
                take = rs1v != rs2v
            elif f3 == 4:
                take = _s32(rs1v) < _s32(rs2v)
            elif f3 == 5:
                take = _s32(rs1v) >= _s32(rs2v)
            elif f3 == 6:
                take = rs1v < rs2v
            elif f3 == 7:
                take = rs1v >= rs2v
            else:
                raise RefHalt("illegal")
            if take:
                tgt = (self.pc + off) & MASK32
                if tgt & 3:
                    raise RefHalt("jump target misaligned")
                nxt = tgt
        elif opc == 0x03:                                 # loads
            addr = (rs1v + imm_i) & MASK32
            if f3 == 0:
                self._set(rd, _sx(self._rd_mem(addr, 1), 8) & MASK32)
            elif f3 == 1:
                if addr & 1:
                    raise RefHalt("misaligned")
                self._set(rd, _sx(self._rd_mem(addr, 2), 16) & MASK32)
            elif f3 == 2:
                if addr & 3:
                    raise RefHalt("misaligned")
                self._set(rd, self._rd_mem(addr, 4))
            elif f3 == 4:
                self._set(rd, self._rd_mem(addr, 1))
            elif f3 == 5:
                if addr & 1:
                    raise RefHalt("misaligned")
                self._set(rd, self._rd_mem(addr, 2))
            else:
                raise RefHalt("illegal")
        elif opc == 0x23:                                 # stores
            addr = (rs1v + _sx((f7 << 5) | rd, 12)) & MASK32
            if f3 == 0:
                self._wr_mem(addr, 1, rs2v)
            elif f3 == 1:
                if addr & 1:
                    raise RefHalt("misaligned")
                self._wr_mem(addr, 2, rs2v)
            elif f3 == 2:
                if addr & 3:
                    raise RefHalt("misaligned")
                self._wr_mem(addr, 4, rs2v)
            else:
                raise RefHalt("illegal")
        elif opc == 0x13:                                 # OP-IMM
            if f3 == 0:
                self._set(rd, rs1v + imm_i)
            elif f3 == 1:
                if f7 != 0:
                    raise RefHalt("illegal")
                self._set(rd, rs1v << ((w >> 20) & 0x1F))
            elif f3 == 2:
                self._set(rd, int(_s32(rs1v) < imm_i))
            elif f3 == 3:
                self._set(rd, int(rs1v < (imm_i & MASK32)))
            elif f3 == 4:
                self._set(rd, rs1v ^ imm_i)
            elif f3 == 5:
                sh = (w >> 20) & 0x1F
                if f7 == 0:
                    self._set(rd, rs1v >> sh)
                elif f7 == 0x20:
                    self._set(rd, _s32(rs1v) >> sh)
                else:
                    raise RefHalt("illegal")
            elif f3 == 6:
                self._set(rd, rs1v | imm_i)
            elif f3 == 7:
                self._set(rd, rs1v & imm_i)
        elif opc == 0x33 and f7 == 0x01:                  # M extension
            a, b = rs1v, rs2v
            sa, sb = _s32(a), _s32(b)
            if f3 == 0:
                self._set(rd, a * b)
            elif f3 == 1:
                self._set(rd, (sa * sb) >> 32)
            elif f3 == 2:
                self._set(rd, (sa * b) >> 32)
            elif f3 == 3:
                self._set(rd, (a * b) >> 32)
            elif f3 == 4:                                 # div
                if sb == 0:
                    self._set(rd, MASK32)
                elif sa == -(1 << 31) and sb == -1:
                    self._set(rd, 1 << 31)
                else:
                    q = abs(sa) // abs(sb)
                    self._set(rd, q if (sa < 0) == (sb < 0) else -q)
            elif f3 == 5:                                 # divu
                self._set(rd, MASK32 if b == 0 else a // b)
            elif f3 == 6:                                 # rem
                if sb == 0:
                    self._set(rd, a)
                elif sa == -(1 << 31) and sb == -1:
                    self._set(rd, 0)
                else:
                    q = abs(sa) // abs(sb)
                    q = q if (sa < 0) == (sb < 0) else -q
                    self._set(rd, sa - sb * q)
            else:
                raise RefHalt("illegal")
        elif opc == 0x33:                                 # OP
            sh = rs2v & 0x1F
            if f3 == 0 and f7 == 0:
                self._set(rd, rs1v + rs2v)
            elif f3 == 0 and f7 == 0x20:
                self._set(rd, rs1v - rs2v)
            elif f3 == 1 and f7 == 0:
                self._set(rd, rs1v << sh)
            elif f3 == 2 and f7 == 0:
                self._set(rd, int(_s32(rs1v) < _s32(rs2v)))
            elif f3 == 3 and f7 == 0:
                self._set(rd, int(rs1v < rs2v))
            elif f3 == 4 and f7 == 0:
                self._set(rd, rs1v ^ rs2v)
            elif f3 == 5 and f7 == 0:
                self._set(rd, rs1v >> sh)
            elif f3 == 5 and f7 == 0x20:
                self._set(rd, _s32(rs1v) >> sh)
            elif f3 == 6 and f7 == 0:
                self._set(rd, rs1v | rs2v)
            elif f3 == 7 and f7 == 0:
                self._set(rd, rs1v & rs2v)
            else:
                raise RefHalt("illegal")
        else:
            raise RefHalt("illegal")
        self.pc = nxt
