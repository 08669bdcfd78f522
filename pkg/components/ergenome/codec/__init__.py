"""Binary codec component: little-endian framing, varints and bit packing."""

from ergenome.codec.bitpack import bit_width, pack_uints, packed_size, unpack_uints
from ergenome.codec.core import BinaryReader, BinaryWriter, unzigzag, zigzag

__all__ = [
    "BinaryReader",
    "BinaryWriter",
    "bit_width",
    "pack_uints",
    "packed_size",
    "unpack_uints",
    "unzigzag",
    "zigzag",
]
