"""Vocabulary generation, blocklists, top-K ranking, manifest export."""

import logging
import random

import pytest

from triggercraft.candidates import (
    Candidate,
    DEFAULT_VOICES,
    Voice,
    build_blocklist,
    dictionary_candidates,
    export_manifest,
    extract_ngrams,
    normalize_label,
    rank_candidates,
)
from triggercraft.distance import CostModel, align
from triggercraft.errors import ConfigError, EmptyVocabulary
from triggercraft.lexicon import WakeWordSpec

UNWEIGHTED = CostModel.unweighted()

# A ten-phone wake word whose candidates can be placed at exact distances
# k/10 by substituting k phones.
TIE_WAKE = WakeWordSpec(id="T", text="padded wake", phones=("B", "AA") * 5)


def _sub(positions):
    phones = list(TIE_WAKE.phones)
    for pos in positions:
        phones[pos] = "IY" if phones[pos] == "B" else "UW"
    return Candidate(label="", prons=(tuple(phones),))


def tie_vocab():
    """Five candidates at L = 0.1, 0.2, 0.2, 0.2, 0.3 from TIE_WAKE."""
    specs = {
        "one": (0,),
        "two a": (0, 2),
        "two b": (0, 4),
        "two c": (2, 6),
        "three": (0, 2, 4),
    }
    return [
        Candidate(label=label, prons=_sub(positions).prons)
        for label, positions in specs.items()
    ]


class TestNormalizeLabel:
    def test_lowercase_and_whitespace(self):
        assert normalize_label("  A   Lesson ") == "a lesson"


class TestDictionaryCandidates:
    def test_one_per_word_with_variants(self, mini_dictionary):
        cands = {c.label: c for c in dictionary_candidates(mini_dictionary)}
        assert len(cands) == len(mini_dictionary)
        assert cands["tomato"].prons == (
            ("T", "AH", "M", "EY", "T", "OW"),
            ("T", "AH", "M", "AA", "T", "OW"),
        )
        assert cands["echo"].source == "dictionary"

    def test_empty_pronunciations_rejected(self):
        with pytest.raises(ValueError):
            Candidate(label="x", prons=())


class TestBuildBlocklist:
    def test_homophones_of_the_wake_word(self, wake_by_id, mini_dictionary):
        # HAY sounds exactly like HEY; "a" can be pronounced EY, a piece of it.
        assert build_blocklist(wake_by_id["VA4"], mini_dictionary) == {"hey", "hay", "a"}

    def test_pieces_of_the_wake_word(self, wake_by_id, mini_dictionary):
        assert build_blocklist(wake_by_id["VA1"], mini_dictionary) == {"alexa", "a"}

    def test_explicit_entries_included(self, wake_by_id, mini_dictionary):
        blocked = build_blocklist(wake_by_id["VA2"], mini_dictionary)
        assert blocked == {"computer", "computed", "a"}

    def test_wake_text_blocked_even_when_out_of_vocabulary(self, mini_dictionary):
        wake = WakeWordSpec(id="X", text="Jarvis", phones=("JH", "AA", "R"))
        assert "jarvis" in build_blocklist(wake, mini_dictionary)

    def test_similar_but_not_contained_words_stay(self, wake_by_id, mini_dictionary):
        # LEXUS shares five phones with ALEXA but ends differently; COMMUTER
        # drops a phone from COMPUTER.  Neither is a contiguous piece.
        assert "lexus" not in build_blocklist(wake_by_id["VA1"], mini_dictionary)
        assert "commuter" not in build_blocklist(wake_by_id["VA2"], mini_dictionary)


class TestRankCandidates:
    def test_boundary_tie_rule(self):
        ranked = rank_candidates(tie_vocab(), TIE_WAKE, UNWEIGHTED, k=2, seed=0)
        assert [item.rank for item in ranked.items] == [1, 2]
        assert ranked.items[0].candidate.label == "one"
        assert ranked.items[0].distance == 0.1
        assert ranked.items[1].candidate.label in {"two a", "two b", "two c"}
        assert ranked.items[1].distance == 0.2
        assert ranked.boundary_pool_size == 3

    def test_same_seed_is_stable(self):
        first = rank_candidates(tie_vocab(), TIE_WAKE, UNWEIGHTED, k=2, seed=41)
        second = rank_candidates(tie_vocab(), TIE_WAKE, UNWEIGHTED, k=2, seed=41)
        assert [i.candidate.label for i in first.items] == [
            i.candidate.label for i in second.items
        ]

    def test_all_tied_candidates_reachable_across_seeds(self):
        drawn = {
            rank_candidates(tie_vocab(), TIE_WAKE, UNWEIGHTED, k=2, seed=seed)
            .items[1]
            .candidate.label
            for seed in range(40)
        }
        assert drawn == {"two a", "two b", "two c"}

    def test_seeds_differ_only_inside_the_tie_pool(self):
        for seed in range(10):
            ranked = rank_candidates(tie_vocab(), TIE_WAKE, UNWEIGHTED, k=3, seed=seed)
            labels = [i.candidate.label for i in ranked.items]
            assert labels[0] == "one"
            assert set(labels[1:]) <= {"two a", "two b", "two c"}

    def test_distinct_distances_no_draw(self):
        vocab = [c for c in tie_vocab() if c.label in ("one", "two a", "three")]
        ranked = rank_candidates(vocab, TIE_WAKE, UNWEIGHTED, k=2, seed=5)
        assert [i.candidate.label for i in ranked.items] == ["one", "two a"]
        assert ranked.boundary_pool_size == 0

    def test_exact_fill_involves_no_randomness(self):
        # One below the boundary, three tied, K=4: the ties exactly fill the
        # open slots, so every seed returns the same list and no pool is
        # reported.
        vocab = tie_vocab()[:4]  # one, two a, two b, two c
        lists = [
            rank_candidates(vocab, TIE_WAKE, UNWEIGHTED, k=4, seed=seed)
            for seed in (0, 1, 2)
        ]
        labels = [[i.candidate.label for i in r.items] for r in lists]
        assert labels[0] == labels[1] == labels[2]
        assert all(r.boundary_pool_size == 0 for r in lists)

    def test_small_vocab_returns_everything(self):
        ranked = rank_candidates(tie_vocab(), TIE_WAKE, UNWEIGHTED, k=50, seed=0)
        assert len(ranked.items) == 5
        assert ranked.boundary_pool_size == 0
        assert [i.rank for i in ranked.items] == [1, 2, 3, 4, 5]

    def test_distances_nondecreasing(self):
        ranked = rank_candidates(tie_vocab(), TIE_WAKE, UNWEIGHTED, k=5, seed=0)
        distances = [i.distance for i in ranked.items]
        assert distances == sorted(distances)

    def test_matches_plain_sort_when_distinct(self, mini_dictionary, wake_by_id):
        # Oracle: with no boundary draw, top-K is a plain sort by distance.
        wake = wake_by_id["VA1"]
        vocab = dictionary_candidates(mini_dictionary)
        blocked = build_blocklist(wake, mini_dictionary)
        ranked = rank_candidates(
            vocab, wake, UNWEIGHTED, k=len(vocab), seed=0, blocklist=blocked
        )
        expected = sorted(
            (c for c in vocab if c.label not in blocked),
            key=lambda c: (
                min(align(wake.phones, p, UNWEIGHTED).L for p in c.prons),
                c.label,
            ),
        )
        assert [i.candidate.label for i in ranked.items] == [c.label for c in expected]

    def test_blocklisted_labels_never_ranked(self, mini_dictionary, wake_by_id):
        rng = random.Random(8)
        wake = wake_by_id["VA3"]
        vocab = dictionary_candidates(mini_dictionary)
        for _ in range(10):
            extra = {c.label for c in rng.sample(vocab, 5)}
            ranked = rank_candidates(vocab, wake, UNWEIGHTED, k=100, seed=1, blocklist=extra)
            labels = {i.candidate.label for i in ranked.items}
            assert not (labels & extra)
            assert "echo" not in labels  # wake word text always excluded

    def test_empty_vocabulary_after_filtering(self, wake_by_id):
        vocab = [Candidate(label="echo", prons=(("EH", "K", "OW"),))]
        with pytest.raises(EmptyVocabulary):
            rank_candidates(vocab, wake_by_id["VA3"], UNWEIGHTED, k=5, seed=0)

    def test_k_must_be_positive(self, wake_by_id):
        with pytest.raises(ValueError):
            rank_candidates(tie_vocab(), TIE_WAKE, UNWEIGHTED, k=0, seed=0)

    def test_parallel_equals_sequential(self, mini_dictionary, wake_by_id):
        wake = wake_by_id["VA2"]
        vocab = dictionary_candidates(mini_dictionary)
        lone = rank_candidates(vocab, wake, UNWEIGHTED, k=10, seed=3, workers=1)
        pooled = rank_candidates(vocab, wake, UNWEIGHTED, k=10, seed=3, workers=2)
        assert [(i.rank, i.candidate.label, i.distance) for i in lone.items] == [
            (i.rank, i.candidate.label, i.distance) for i in pooled.items
        ]
        assert lone.boundary_pool_size == pooled.boundary_pool_size


class TestExtractNgrams:
    def test_sliding_window(self, mini_dictionary):
        out = extract_ngrams(["fresh parmesan cheese"], 2, mini_dictionary)
        assert {c.label for c in out} == {"fresh parmesan", "parmesan cheese"}
        assert all(c.source == "2-gram" for c in out)

    def test_line_too_short(self, mini_dictionary):
        assert extract_ngrams(["my cereal"], 3, mini_dictionary) == []

    def test_window_count_per_line(self, mini_dictionary):
        # Six tokens, n=3: four windows before dedup.
        out = extract_ngrams(["the echo sat by the road"], 3, mini_dictionary)
        assert sum(c.count for c in out) == 4

    def test_windows_never_cross_lines(self, mini_dictionary):
        out = extract_ngrams(["fresh parmesan", "my cereal"], 2, mini_dictionary)
        labels = {c.label for c in out}
        assert labels == {"fresh parmesan", "my cereal"}

    def test_duplicates_merged_with_counts(self, mini_dictionary):
        out = extract_ngrams(["the echo", "the echo please"], 2, mini_dictionary)
        by_label = {c.label: c for c in out}
        assert by_label["the echo"].count == 2
        assert by_label["echo please"].count == 1

    def test_case_and_punctuation_normalized(self, mini_dictionary):
        out = extract_ngrams(["Fresh, PARMESAN!"], 2, mini_dictionary)
        assert [c.label for c in out] == ["fresh parmesan"]

    def test_pronunciations_cover_variant_products(self, mini_dictionary):
        out = extract_ngrams(["the echo"], 2, mini_dictionary)
        the_echo = next(c for c in out if c.label == "the echo")
        assert len(the_echo.prons) == 2  # THE has two variants

    def test_oov_ngrams_dropped_with_diagnostic(self, mini_dictionary, caplog):
        with caplog.at_level(logging.WARNING, logger="triggercraft.candidates"):
            out = extract_ngrams(["the zyzzyva sat"], 1, mini_dictionary)
        assert {c.label for c in out} == {"the", "sat"}
        assert any("out-of-vocabulary" in r.message for r in caplog.records)

    def test_empty_input(self, mini_dictionary):
        assert extract_ngrams([], 2, mini_dictionary) == []

    @pytest.mark.parametrize("n", [0, 4])
    def test_n_out_of_range(self, n, mini_dictionary):
        with pytest.raises(ValueError):
            extract_ngrams(["the echo"], n, mini_dictionary)


class TestExportManifest:
    def _ranked(self, labels):
        vocab = [
            Candidate(label=label, prons=(("B", "AA"),), source="dictionary")
            for label in labels
        ]
        wake = WakeWordSpec(id="W", text="unrelated", phones=("K", "IY"))
        return rank_candidates(vocab, wake, UNWEIGHTED, k=len(labels), seed=0)

    def test_rank_major_voice_minor_order(self):
        manifest = export_manifest(self._ranked(["alpha", "beta"]))
        assert len(manifest.entries) == 20
        assert [e.label for e in manifest.entries[:10]] == ["alpha"] * 10
        assert [e.voice_id for e in manifest.entries[:4]] == [
            "standard-a", "standard-b", "standard-c", "standard-d",
        ]

    def test_file_name_pattern(self):
        manifest = export_manifest(self._ranked(["a lesson"]))
        assert manifest.entries[0].file_name == "1_a_lesson_standard-a.wav"
        assert manifest.entries[-1].file_name == "1_a_lesson_wavenet-f.wav"

    def test_slug_collisions_suffixed(self, caplog):
        with caplog.at_level(logging.WARNING, logger="triggercraft.candidates"):
            manifest = export_manifest(self._ranked(["a lesson", "a-lesson"]))
        names = {e.file_name for e in manifest.entries}
        assert len(names) == 20
        assert any("_2_" in name for name in names)
        assert any("collision" in r.message for r in caplog.records)

    def test_empty_ranked_list(self, wake_by_id):
        ranked = rank_candidates(
            [Candidate(label="x", prons=(("B",),))],
            wake_by_id["VA4"],
            UNWEIGHTED,
            k=1,
            seed=0,
        )
        ranked.items = []
        assert export_manifest(ranked).entries == []

    def test_default_voice_pool_is_valid(self):
        assert len(DEFAULT_VOICES) == 10
        export_manifest(self._ranked(["alpha"]), DEFAULT_VOICES)

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda v: v[:9],  # too few
            lambda v: list(v[:4]) + [Voice("s-x", "standard", "f")] + list(v[5:]),  # 5 standard
            lambda v: [Voice("standard-a", "standard", "f")] * 2 + list(v[2:]),  # dup ids
            lambda v: [Voice("standard-a", "standard", "f"),
                       Voice("standard-b", "standard", "f"),
                       Voice("standard-c", "standard", "f"),
                       Voice("standard-d", "standard", "m")] + list(v[4:]),  # gender skew
        ],
    )
    def test_bad_voice_pools_rejected(self, mutate):
        voices = mutate(list(DEFAULT_VOICES))
        with pytest.raises(ConfigError):
            export_manifest(self._ranked(["alpha"]), voices)
