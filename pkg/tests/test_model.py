import numpy as np
import pytest
from hypothesis import given, strategies as st

from chansel.errors import (
    AllZeroMaskError,
    EmptySubsetError,
    IndexOutOfRangeError,
)
from chansel.model import (
    ChannelSubset,
    Montage,
    SelectionMethod,
    SelectionTrace,
    SubsetMask,
    TraceStep,
    TrialSet,
    canonicalize,
    mask_of,
    restrict,
    subset_of,
)


def make_trials(samples, labels, names=None, fs=250.0):
    samples = np.asarray(samples, dtype=np.float32)
    if names is None:
        names = tuple(f"ch{i}" for i in range(samples.shape[1]))
    return TrialSet(Montage(tuple(names), fs), samples, labels, max(labels))


class TestMontage:
    def test_rejects_duplicate_names(self):
        with pytest.raises(ValueError):
            Montage(("C3", "C3"), 250.0)

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            Montage((), 250.0)
        with pytest.raises(ValueError):
            Montage(("C3", ""), 250.0)

    def test_rejects_bad_fs(self):
        with pytest.raises(ValueError):
            Montage(("C3",), 0.0)

    def test_case_insensitive_lookup(self):
        m = Montage(("FCz", "C3"), 250.0)
        assert m.index_of("fcz") == 0
        with pytest.raises(KeyError):
            m.index_of("Pz")


class TestTrialSet:
    def test_label_bounds(self):
        with pytest.raises(ValueError):
            make_trials(np.zeros((2, 1, 3)), [0, 1])
        with pytest.raises(ValueError):
            TrialSet(Montage(("a",), 100.0), np.zeros((2, 1, 3)), [1, 3], 3)

    def test_every_class_present(self):
        with pytest.raises(ValueError):
            TrialSet(Montage(("a",), 100.0), np.zeros((3, 1, 2)), [1, 1, 3], 3)

    def test_rejects_non_finite(self):
        bad = np.zeros((1, 1, 2), dtype=np.float32)
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError):
            make_trials(bad, [1])

    def test_immutable(self):
        ts = make_trials(np.zeros((1, 2, 2)), [1])
        with pytest.raises(ValueError):
            ts.samples[0, 0, 0] = 1.0
        with pytest.raises(ValueError):
            ts.labels[0] = 2


class TestCanonicalize:
    def test_sorts_and_dedups(self):
        assert canonicalize([3, 1, 3]).indices == (1, 3)

    def test_singleton_identity(self):
        assert canonicalize([0]).indices == (0,)

    def test_bound_check(self):
        with pytest.raises(IndexOutOfRangeError):
            canonicalize([5], n_channels=4)
        with pytest.raises(IndexOutOfRangeError):
            canonicalize([-1])

    def test_empty(self):
        with pytest.raises(EmptySubsetError):
            canonicalize([])

    def test_constructor_requires_canonical_form(self):
        with pytest.raises(ValueError):
            ChannelSubset((3, 1))
        with pytest.raises(ValueError):
            ChannelSubset((1, 1))

    @given(st.lists(st.integers(min_value=0, max_value=11), min_size=1, max_size=20))
    def test_member_set_determines_subset(self, indices):
        shuffled = list(reversed(indices))
        assert canonicalize(indices) == canonicalize(shuffled + indices)

    def test_value_semantics(self):
        assert canonicalize([2, 0]) == ChannelSubset((0, 2))
        assert hash(canonicalize([2, 0])) == hash(ChannelSubset((0, 2)))


class TestMaskRoundTrip:
    def test_examples(self):
        assert mask_of(ChannelSubset((1, 3)), 4).bits == (0, 1, 0, 1)
        assert mask_of(ChannelSubset((0, 1, 2)), 3).bits == (1, 1, 1)

    def test_all_zero(self):
        with pytest.raises(AllZeroMaskError):
            subset_of(SubsetMask((0, 0, 0)))

    def test_subset_too_wide(self):
        with pytest.raises(IndexOutOfRangeError):
            mask_of(ChannelSubset((4,)), 4)

    @pytest.mark.parametrize("c", range(1, 9))
    def test_exhaustive_inverse_small_widths(self, c):
        # every non-empty subset of a c-channel montage survives the round trip
        for code in range(1, 2 ** c):
            bits = tuple((code >> i) & 1 for i in range(c))
            subset = subset_of(SubsetMask(bits))
            assert mask_of(subset, c).bits == bits
            assert subset_of(mask_of(subset, c)) == subset

    @given(st.integers(min_value=1, max_value=12), st.data())
    def test_inverse_up_to_12(self, c, data):
        members = data.draw(
            st.sets(st.integers(min_value=0, max_value=c - 1), min_size=1)
        )
        subset = canonicalize(sorted(members), c)
        assert subset_of(mask_of(subset, c)) == subset


class TestRestrict:
    def test_full_subset_is_identity(self):
        ts = make_trials(np.arange(24).reshape(2, 3, 4), [1, 2])
        out = restrict(ts, ChannelSubset((0, 1, 2)))
        assert np.array_equal(out.samples, ts.samples)
        assert out.montage == ts.montage

    def test_keeps_requested_channels_in_order(self):
        ts = make_trials(np.arange(12).reshape(1, 3, 4), [1], names=("a", "b", "c"))
        out = restrict(ts, ChannelSubset((0, 2)))
        assert out.montage.channel_names == ("a", "c")
        assert np.array_equal(out.samples[0], ts.samples[0][[0, 2]])
        assert np.array_equal(out.labels, ts.labels)

    def test_composition_matches_single_step(self):
        # hand-checked on a 3-channel x 4-sample trial: restricting to {0,2}
        # and then taking both remaining channels equals the one-step restriction
        base = np.array([[[0, 1, 2, 3], [10, 11, 12, 13], [20, 21, 22, 23]]])
        ts = make_trials(base, [1], names=("a", "b", "c"))
        once = restrict(ts, ChannelSubset((0, 2)))
        twice = restrict(restrict(ts, ChannelSubset((0, 2))), ChannelSubset((0, 1)))
        assert np.array_equal(once.samples, twice.samples)
        assert once.montage == twice.montage
        expected = np.array([[[0, 1, 2, 3], [20, 21, 22, 23]]], dtype=np.float32)
        assert np.array_equal(once.samples, expected)
        # re-indexing: channel 1 of the restricted set is channel 2 of the original
        deep = restrict(restrict(ts, ChannelSubset((0, 2))), ChannelSubset((1,)))
        assert np.array_equal(deep.samples[0, 0], ts.samples[0, 2])

    def test_out_of_range(self):
        ts = make_trials(np.zeros((1, 2, 2)), [1])
        with pytest.raises(IndexOutOfRangeError):
            restrict(ts, ChannelSubset((0, 5)))

    def test_preserves_counts_and_labels(self):
        rng = np.random.default_rng(7)
        ts = make_trials(rng.normal(size=(10, 4, 6)), (np.arange(10) % 3) + 1)
        out = restrict(ts, ChannelSubset((1, 3)))
        assert out.n_trials == ts.n_trials
        assert out.n_samples == ts.n_samples
        assert np.array_equal(out.labels, ts.labels)
        assert out.n_classes == ts.n_classes


class TestSelectionTrace:
    def step(self, indices, acc, cand=1):
        return TraceStep(ChannelSubset(tuple(indices)), acc, cand)

    def test_best_step_ties_to_smallest_index(self):
        trace = SelectionTrace(
            (self.step([0], 0.7), self.step([1], 0.9), self.step([2], 0.9)),
            SelectionMethod.EXHAUSTIVE,
        )
        assert trace.best_step == 1

    def test_greedy_nesting_enforced(self):
        with pytest.raises(ValueError):
            SelectionTrace(
                (self.step([0], 0.5), self.step([1, 2], 0.6)),
                SelectionMethod.GREEDY,
            )
        with pytest.raises(ValueError):
            SelectionTrace((self.step([0, 1], 0.5),), SelectionMethod.GREEDY)

    def test_valid_greedy(self):
        trace = SelectionTrace(
            (self.step([2], 0.5), self.step([2, 5], 0.7)),
            SelectionMethod.GREEDY,
        )
        assert trace.best.subset.indices == (2, 5)
