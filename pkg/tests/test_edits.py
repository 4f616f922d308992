"""Edit programs: derivation, application, costs, serialization."""

import numpy as np
import pytest

from helpers import random_pair
from oracle import best_edit_path
from spanalign.edits import (ADD, COST_ADD, COST_DEL, COST_REPLACE, DEL,
                             EditProgram, KEEP, REPLACE_E, REPLACE_S,
                             apply_program, derive_program, format_program,
                             parse_program)
from spanalign.errors import FormatError, ValidationError


def tags(program):
    return [tag for tag, _ in program.ops]


def oracle_cost(program):
    """Recompute cost the way the enumeration oracle prices paths."""
    total = 0.0
    in_block = False
    for tag, _ in program.ops:
        if tag == REPLACE_S:
            in_block = True
            total += COST_REPLACE
        elif tag == REPLACE_E:
            in_block = False
        elif tag == DEL:
            total += COST_DEL
        elif tag == ADD and not in_block:
            total += COST_ADD
    return total


class TestDeriveProgram:
    def test_identity_is_all_keep(self):
        program = derive_program(["a", "b", "c"], ["a", "b", "c"])
        assert tags(program) == [KEEP, KEEP, KEEP]

    def test_empty_target_is_all_del(self):
        program = derive_program(["a", "b"], [])
        assert tags(program) == [DEL, DEL]

    def test_empty_source_is_all_add(self):
        program = derive_program([], ["x", "y"])
        assert program.ops == ((ADD, "x"), (ADD, "y"))

    def test_replace_needs_alignment(self):
        src, tgt = ["a"], ["b"]
        without = derive_program(src, tgt)
        assert tags(without) == [DEL, ADD]
        with_link = derive_program(src, tgt, frozenset({(0, 0)}))
        assert tags(with_link) == [REPLACE_S, ADD, REPLACE_E]
        assert apply_program(src, with_link) == tgt

    def test_replace_requires_one_to_one(self):
        # Source word 0 is aligned to two targets, so neither pair may
        # become a REPLACE.
        program = derive_program(["a"], ["b", "c"],
                                 frozenset({(0, 0), (0, 1)}))
        assert REPLACE_S not in tags(program)

    def test_identical_tokens_keep_beats_replace(self):
        program = derive_program(["same"], ["same"], frozenset({(0, 0)}))
        assert tags(program) == [KEEP]

    def test_del_preferred_over_add_on_ties(self):
        program = derive_program(["a"], ["b"])
        assert tags(program) == [DEL, ADD]

    def test_application_round_trip(self):
        rng = np.random.default_rng(501)
        vocab = ["u", "v", "w", "x"]
        for trial in range(200):
            pair = random_pair(rng, "p", int(rng.integers(0, 7)) + 1,
                               int(rng.integers(0, 7)) + 1, vocab=vocab)
            program = derive_program(pair.src_tokens, pair.tgt_tokens,
                                     pair.sure)
            assert apply_program(pair.src_tokens, program) \
                == list(pair.tgt_tokens)

    def test_minimal_cost_and_tie_break_match_oracle(self):
        rng = np.random.default_rng(502)
        vocab = ["u", "v", "w"]
        for trial in range(150):
            n = int(rng.integers(0, 5))
            m = int(rng.integers(0, 5))
            src = [vocab[int(rng.integers(3))] for _ in range(n)]
            tgt = [vocab[int(rng.integers(3))] for _ in range(m)]
            alignment = frozenset(
                {(i, j) for i in range(n) for j in range(m)
                 if rng.random() < 0.2})
            program = derive_program(src, tgt, alignment)
            expected_cost, expected_ops = best_edit_path(src, tgt, alignment)
            assert oracle_cost(program) == expected_cost
            assert program.ops == tuple(expected_ops)
            assert apply_program(src, program) == tgt


class TestPinnedExample:
    SOURCE = ["With", "Canadian", "collaborators,", "Lloyd", "went", "on",
              "to", "conduct", "laboratory", "simulations", "of", "his",
              "model."]
    TARGET = ["Lloyd", "performed", "successful", "laboratory",
              "experiments", "of", "his", "model."]
    ALIGNMENT = frozenset({(3, 0), (7, 1), (8, 3), (9, 4), (10, 5), (11, 6),
                           (12, 7)})

    def test_tail_replaces_simulations(self):
        program = derive_program(self.SOURCE, self.TARGET, self.ALIGNMENT)
        assert program.ops[-7:] == (
            (KEEP, None),
            (REPLACE_S, None), (ADD, "experiments"), (REPLACE_E, None),
            (KEEP, None), (KEEP, None), (KEEP, None))
        assert apply_program(self.SOURCE, program) == self.TARGET

    def test_full_program_cost(self):
        program = derive_program(self.SOURCE, self.TARGET, self.ALIGNMENT)
        assert oracle_cost(program) == 8.0


class TestApplyProgram:
    def test_over_consumption_rejected(self):
        program = EditProgram(((KEEP, None), (KEEP, None)))
        with pytest.raises(ValidationError, match="more source tokens"):
            apply_program(["only"], program)

    def test_under_consumption_rejected(self):
        program = EditProgram(((KEEP, None),))
        with pytest.raises(ValidationError, match="consumed 1 of 2"):
            apply_program(["a", "b"], program)

    def test_replace_consumes_one_source_token(self):
        program = EditProgram(((REPLACE_S, None), (ADD, "x"),
                               (REPLACE_E, None)))
        assert apply_program(["old"], program) == ["x"]


class TestProgramGrammar:
    @pytest.mark.parametrize("ops", [
        ((REPLACE_S, None), (REPLACE_E, None)),             # block without ADD
        ((REPLACE_S, None), (ADD, "x")),                    # unterminated
        ((REPLACE_E, None),),                               # end without start
        ((REPLACE_S, None), (REPLACE_S, None)),             # nested
        ((REPLACE_S, None), (KEEP, None), (REPLACE_E, None)),
        ((ADD, None),),                                     # payload missing
        (("SWAP", None),),                                  # unknown tag
    ])
    def test_invalid_sequences(self, ops):
        with pytest.raises(ValidationError):
            EditProgram(tuple(ops))

    def test_add_outside_block_is_fine(self):
        EditProgram(((ADD, "x"), (KEEP, None)))


class TestSerialization:
    def test_format_basic(self):
        program = EditProgram(((KEEP, None), (DEL, None), (ADD, "word"),
                               (REPLACE_S, None), (ADD, "new"),
                               (REPLACE_E, None)))
        assert format_program(program) \
            == "KEEP DEL ADD(word) REPLACE-S ADD(new) REPLACE-E"

    def test_escaping_round_trip(self):
        nasty = ["close)", "back\\slash", "two words", "tab\tchar", ")", " "]
        program = EditProgram(tuple((ADD, word) for word in nasty))
        line = format_program(program)
        assert parse_program(line).ops == program.ops

    def test_random_round_trip(self):
        rng = np.random.default_rng(503)
        alphabet = list("ab\\) \t(")
        for trial in range(100):
            words = ["".join(rng.choice(alphabet,
                                        size=int(rng.integers(1, 6))))
                     for _ in range(int(rng.integers(1, 4)))]
            ops = [(KEEP, None)] + [(ADD, word) for word in words]
            program = EditProgram(tuple(ops))
            assert parse_program(format_program(program)) == program

    @pytest.mark.parametrize("line,message", [
        ("ADD(x", "unterminated ADD\\("),
        ("ADD(a b)", "unescaped whitespace"),
        ("ADD(x\\", "dangling escape"),
        ("KEEP FROB", "unknown op 'FROB'"),
        ("REPLACE-S ADD(x)", "unterminated REPLACE block"),
    ])
    def test_parse_errors(self, line, message):
        with pytest.raises(FormatError, match=message):
            parse_program(line)

    def test_parse_reports_location(self):
        with pytest.raises(FormatError, match="edits.txt:3"):
            parse_program("BOGUS", where="edits.txt:3")

    def test_whitespace_tolerant(self):
        program = parse_program("  KEEP   DEL  ")
        assert tags(program) == [KEEP, DEL]
