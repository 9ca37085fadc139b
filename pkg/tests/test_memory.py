"""Tests for the FIFO memory bank."""

from dataclasses import dataclass

import pytest

from src.core.memory import MemoryBank


@dataclass
class Entry:
    frame_index: int


class TestMemoryBank:
    def test_evicts_oldest_beyond_capacity(self):
        bank = MemoryBank(7)
        for i in range(9):
            bank.push(Entry(i))
        assert len(bank) == 7
        assert bank.frame_indices == [2, 3, 4, 5, 6, 7, 8]

    def test_non_increasing_push_rejected(self):
        bank = MemoryBank(3)
        bank.push(Entry(4))
        with pytest.raises(ValueError):
            bank.push(Entry(4))
        with pytest.raises(ValueError):
            bank.push(Entry(2))
        assert bank.frame_indices == [4]

    def test_gaps_are_allowed(self):
        bank = MemoryBank(3).push(Entry(0)).push(Entry(5))
        assert bank.get(5).frame_index == 5
        assert bank.get(3) is None

    def test_reset_empties(self):
        bank = MemoryBank(2).push(Entry(0)).push(Entry(1))
        bank.reset()
        assert len(bank) == 0
        bank.push(Entry(0))
        assert bank.frame_indices == [0]

    def test_capacity_must_be_positive(self):
        with pytest.raises(ValueError):
            MemoryBank(0)
