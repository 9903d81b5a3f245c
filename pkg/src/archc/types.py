"""Concrete (elaborated) signal types."""

from __future__ import annotations

from dataclasses import dataclass


class Type:
    pass


@dataclass(frozen=True)
class Bit(Type):
    def __str__(self) -> str:
        return "Bit"


@dataclass(frozen=True)
class Bool(Type):
    def __str__(self) -> str:
        return "Bool"


@dataclass(frozen=True)
class UInt(Type):
    width: int

    def __str__(self) -> str:
        return f"UInt<{self.width}>"


@dataclass(frozen=True)
class SInt(Type):
    width: int

    def __str__(self) -> str:
        return f"SInt<{self.width}>"


@dataclass(frozen=True)
class Clock(Type):
    domain: str

    def __str__(self) -> str:
        return f"Clock<{self.domain}>"


@dataclass(frozen=True)
class Reset(Type):
    sync: str       # Sync | Async
    polarity: str   # High | Low

    def __str__(self) -> str:
        return f"Reset<{self.sync}, {self.polarity}>"


@dataclass(frozen=True)
class Vec(Type):
    elem: Type
    size: int

    def __str__(self) -> str:
        return f"Vec<{self.elem}, {self.size}>"


@dataclass(frozen=True)
class EnumType(Type):
    owner: str  # construct key the enum is scoped to
    name: str
    variants: tuple[str, ...]

    def __str__(self) -> str:
        return self.name

    @property
    def width(self) -> int:
        return max(1, (len(self.variants) - 1).bit_length())


BIT = Bit()
BOOL = Bool()


def width_of(ty: Type) -> int:
    """Bit width of a data type (Vec = element width x size)."""
    if isinstance(ty, (Bit, Bool, Clock, Reset)):
        return 1
    if isinstance(ty, (UInt, SInt)):
        return ty.width
    if isinstance(ty, EnumType):
        return ty.width
    if isinstance(ty, Vec):
        return width_of(ty.elem) * ty.size
    raise AssertionError(f"width_of({ty!r})")


def is_one_bit_data(ty: Type) -> bool:
    return isinstance(ty, (Bit, Bool)) or (isinstance(ty, UInt) and ty.width == 1)


def is_signed(ty: Type) -> bool:
    return isinstance(ty, SInt)


def assignable(dst: Type, src: Type) -> bool:
    """Width-exact assignment compatibility. Bool is an alias of UInt<1>
    (both directions); Bit behaves as UInt<1> for logic purposes and is
    likewise inter-assignable at one bit. No UInt<->SInt mixing ever."""
    if dst == src:
        return True
    if is_one_bit_data(dst) and is_one_bit_data(src):
        return True
    if isinstance(dst, Vec) and isinstance(src, Vec):
        return dst.size == src.size and assignable(dst.elem, src.elem)
    return False
