"""Tests for the binary writer/reader and fixed-width bit packing."""

from __future__ import annotations

import numpy as np
import pytest

from ergenome.codec import (
    BinaryReader,
    BinaryWriter,
    bit_width,
    pack_uints,
    packed_size,
    unpack_uints,
    unzigzag,
    zigzag,
)
from ergenome.validation import IndexFormatError


class TestBitPacking:
    """Tests for pack_uints and unpack_uints."""

    @pytest.mark.parametrize(("value", "width"), [(0, 0), (1, 1), (9, 4), (255, 8), (256, 9)])
    def test_bit_width(self, value: int, width: int) -> None:
        """Test the minimum width of a value."""
        assert bit_width(value) == width

    def test_msb_first_layout(self) -> None:
        """Test values are packed most-significant bit first and padded at the end."""
        assert pack_uints([1, 2, 3], 2) == bytes([0b01101100])

    def test_packed_size_rounds_up(self) -> None:
        """Test the byte count covers a partial final byte."""
        assert packed_size(3, 3) == 2
        assert len(pack_uints([7, 7, 7], 3)) == 2

    def test_unpack_inverts_pack(self) -> None:
        """Test a mixed run decodes to the same values."""
        values = [0, 5, 17, 1023, 512, 1]
        data = pack_uints(values, 10)

        assert unpack_uints(data, len(values), 10).tolist() == values

    def test_full_64_bit_values(self) -> None:
        """Test the widest values survive packing."""
        values = np.array([2**64 - 1, 0, 2**63], dtype=np.uint64)

        assert unpack_uints(pack_uints(values, 64), 3, 64).tolist() == values.tolist()

    def test_width_zero(self) -> None:
        """Test all-zero runs take no bytes."""
        assert pack_uints([0, 0, 0], 0) == b""
        assert unpack_uints(b"", 3, 0).tolist() == [0, 0, 0]

    def test_value_too_wide(self) -> None:
        """Test a value exceeding the width is rejected."""
        with pytest.raises(ValueError, match="does not fit"):
            pack_uints([8], 3)

    def test_short_buffer(self) -> None:
        """Test unpacking from too few bytes is rejected."""
        with pytest.raises(ValueError, match="needs 2 bytes"):
            unpack_uints(b"\x00", 3, 5)


class TestBinaryWriterReader:
    """Tests for the little-endian record codec."""

    def test_integers_are_little_endian(self) -> None:
        """Test fixed-size integers are written least-significant byte first."""
        writer = BinaryWriter()
        writer.u16(0x0102)
        writer.u32(0x03040506)

        assert writer.getvalue() == b"\x02\x01\x06\x05\x04\x03"

    def test_mixed_record(self) -> None:
        """Test every field kind reads back in order."""
        writer = BinaryWriter()
        writer.u8(7)
        writer.u64(2**40 + 3)
        writer.text("chr20")
        writer.blob(b"\x00\xff")
        writer.array(np.array([3, -1, 9], dtype=np.int64), "<i8")
        writer.packed([100, 103, 109, 100])

        reader = BinaryReader(writer.getvalue())
        assert reader.u8() == 7
        assert reader.u64() == 2**40 + 3
        assert reader.text() == "chr20"
        assert reader.blob() == b"\x00\xff"
        assert reader.array("<i8").tolist() == [3, -1, 9]
        assert reader.packed(4).tolist() == [100, 103, 109, 100]
        assert reader.remaining == 0

    def test_frame_of_reference_header(self) -> None:
        """Test packed runs store their minimum and the width of the largest offset."""
        writer = BinaryWriter()
        writer.packed([100, 103, 109])
        data = writer.getvalue()

        assert data[0] == 100
        assert data[1] == 4

    def test_reader_offset(self) -> None:
        """Test a reader can start inside a buffer."""
        reader = BinaryReader(b"\xaa\xbb\x01\x00", offset=2)

        assert reader.u16() == 1
        assert reader.position == 4

    def test_truncated_read(self) -> None:
        """Test reading past the end is an index format error."""
        reader = BinaryReader(b"\x01\x02")
        with pytest.raises(IndexFormatError, match="Truncated data"):
            reader.u32()

    def test_truncated_blob(self) -> None:
        """Test a length prefix longer than the data is detected."""
        writer = BinaryWriter()
        writer.u32(10)
        writer.raw(b"abc")
        with pytest.raises(IndexFormatError):
            BinaryReader(writer.getvalue()).blob()

    def test_invalid_utf8_text(self) -> None:
        """Test undecodable text fields are format errors."""
        writer = BinaryWriter()
        writer.u16(2)
        writer.raw(b"\xff\xfe")
        with pytest.raises(IndexFormatError, match="UTF-8"):
            BinaryReader(writer.getvalue()).text()

    def test_invalid_packed_width(self) -> None:
        """Test a bit width above 64 is a format error."""
        writer = BinaryWriter()
        writer.varint(0)
        writer.u8(65)
        with pytest.raises(IndexFormatError, match="bit width"):
            BinaryReader(writer.getvalue()).packed(1)


class TestVarints:
    """Tests for LEB128 varints and the zigzag mapping."""

    @pytest.mark.parametrize(
        ("value", "encoded"),
        [(0, b"\x00"), (127, b"\x7f"), (128, b"\x80\x01"), (300, b"\xac\x02")],
    )
    def test_leb128_bytes(self, value: int, encoded: bytes) -> None:
        """Test seven bits per byte, low group first, high bit marking continuation."""
        writer = BinaryWriter()
        writer.varint(value)

        assert writer.getvalue() == encoded
        assert BinaryReader(encoded).varint() == value

    def test_largest_value(self) -> None:
        """Test a full 64-bit value takes ten bytes and reads back."""
        writer = BinaryWriter()
        writer.varint(2**64 - 1)

        assert len(writer) == 10
        assert BinaryReader(writer.getvalue()).varint() == 2**64 - 1

    def test_negative_rejected(self) -> None:
        """Test unsigned varints refuse negative values."""
        with pytest.raises(ValueError, match="negative"):
            BinaryWriter().varint(-1)

    def test_unterminated(self) -> None:
        """Test a varint running off the buffer or past ten bytes is a format error."""
        with pytest.raises(IndexFormatError):
            BinaryReader(b"\x80\x80").varint()
        with pytest.raises(IndexFormatError, match="longer than 10 bytes"):
            BinaryReader(b"\xff" * 11).varint()

    @pytest.mark.parametrize(("value", "mapped"), [(0, 0), (-1, 1), (1, 2), (-2, 3), (2, 4)])
    def test_zigzag(self, value: int, mapped: int) -> None:
        """Test small magnitudes of either sign map to small codes."""
        assert zigzag(value) == mapped
        assert unzigzag(mapped) == value

    def test_signed_varint(self) -> None:
        """Test signed varints read back in order."""
        writer = BinaryWriter()
        for value in (-1_000_000, 0, 63, -64):
            writer.svarint(value)

        reader = BinaryReader(writer.getvalue())
        assert [reader.svarint() for _ in range(4)] == [-1_000_000, 0, 63, -64]
        assert reader.remaining == 0
