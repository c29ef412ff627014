"""Scheme contracts: leak projection, linear codes, the three references."""

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btpeval.errors import ConfigError, ContractError, DimensionError
from btpeval.population import FeatureElement, hamming_distance
from btpeval.rng import substream
from btpeval.schemes import (
    LEAK_AD,
    LEAK_BOTH,
    LEAK_PI,
    REJECT,
    LeakSet,
    LinearCode,
    PlaintextScheme,
    ProtectedTemplate,
    RotationScheme,
    bounded_distance_decode,
    build_scheme,
    hamming_7_4,
    leak_view,
)


def fe(s):
    return FeatureElement.from_string(s)


class TestLeakProjection:
    def setup_method(self):
        self.pt = ProtectedTemplate(pi=b"\x01" * 16, alpha=fe("0101100"))

    def test_both_parts(self):
        v = leak_view(self.pt, LEAK_BOTH)
        assert (v.pi, v.alpha) == (self.pt.pi, self.pt.alpha)
        assert v.has_pi and v.has_ad

    def test_pi_only(self):
        v = leak_view(self.pt, LEAK_PI)
        assert v.pi == self.pt.pi
        assert v.alpha is None and not v.has_ad

    def test_ad_only(self):
        v = leak_view(self.pt, LEAK_AD)
        assert v.alpha == self.pt.alpha
        assert v.pi is None and not v.has_pi

    def test_empty_forbidden(self):
        with pytest.raises(ContractError):
            LeakSet(pi=False, ad=False)

    def test_idempotent(self):
        for leak in (LEAK_PI, LEAK_AD, LEAK_BOTH):
            once = leak_view(self.pt, leak)
            twice = leak_view(once, leak)
            assert once == twice

    def test_widening_a_view_fails(self):
        narrow = leak_view(self.pt, LEAK_PI)
        with pytest.raises(ContractError):
            leak_view(narrow, LEAK_BOTH)

    def test_parse(self):
        assert LeakSet.parse("pi+ad") == LEAK_BOTH
        assert LeakSet.parse("PI") == LEAK_PI
        assert LeakSet.parse("ad") == LEAK_AD
        with pytest.raises(ConfigError):
            LeakSet.parse("px")
        assert str(LEAK_BOTH) == "pi+ad"


class TestLinearCode:
    def test_hamming_code_parameters(self):
        code = hamming_7_4()
        assert code.min_distance == 3
        assert len(set(code.codewords)) == 16

    def test_radius_bound_enforced(self):
        with pytest.raises(ConfigError):
            LinearCode.from_bitstrings(
                ["1000110", "0100101", "0010011", "0001111"], t=2
            )

    def test_codeword_decodes_to_itself(self):
        code = hamming_7_4()
        for w in code.codewords:
            assert bounded_distance_decode(code, FeatureElement(7, w)).value == w

    def test_single_errors_corrected(self):
        # exhaustive: all 16 codewords x 7 single-bit flips
        code = hamming_7_4()
        for w in code.codewords:
            for i in range(7):
                y = FeatureElement(7, w ^ (1 << i))
                assert bounded_distance_decode(code, y).value == w

    def test_weight_two_errors_miscorrect_never_reject(self):
        # perfect code: every word decodes somewhere, but past the radius
        # it lands on a wrong codeword
        code = hamming_7_4()
        for w in code.codewords:
            for i, j in itertools.combinations(range(7), 2):
                y = FeatureElement(7, w ^ (1 << i) ^ (1 << j))
                decoded = bounded_distance_decode(code, y)
                assert decoded is not None
                assert decoded.value != w

    def test_non_perfect_code_rejects(self):
        code = LinearCode.from_bitstrings(["1111"], t=1)
        assert bounded_distance_decode(code, fe("1100")) is None

    def test_dimension_error(self):
        with pytest.raises(DimensionError):
            bounded_distance_decode(hamming_7_4(), fe("000000"))

    def test_degenerate_generator_rejected(self):
        with pytest.raises(ConfigError):
            LinearCode.from_bitstrings(["1010", "1010"], t=0)


class TestFuzzyCommitment:
    def test_own_feature_always_matches(self, fc_scheme):
        for v in range(128):
            x = FeatureElement(7, v)
            for _, pt in fc_scheme.pie_support(x):
                assert fc_scheme.pic(pt.pi, fc_scheme.pir(pt.alpha, x))

    def test_alpha_is_codeword_offset(self, fc_scheme):
        codewords = set(fc_scheme.code.codewords)
        rng = substream(0, "fc")
        for v in (0, 35, 127):
            x = FeatureElement(7, v)
            pt = fc_scheme.pie(x, rng)
            assert (pt.alpha.value ^ x.value) in codewords

    def test_match_iff_within_radius_spotcheck(self, fc_scheme):
        # full 2^7 x 2^7 x 16 sweep lives in the acceptance suite
        rng = substream(1, "fc2")
        for _ in range(300):
            x = FeatureElement(7, int(rng.integers(128)))
            xp = FeatureElement(7, int(rng.integers(128)))
            pt = fc_scheme.pie(x, rng)
            matched = fc_scheme.pic(pt.pi, fc_scheme.pir(pt.alpha, xp))
            assert matched == (hamming_distance(x, xp) <= 1)

    def test_reject_identifier_never_matches(self):
        scheme = build_scheme(
            {"scheme": "fc", "code": {"generator": ["1111"], "t": 1}}, 4
        )
        vid = scheme.pir(fe("0110"), fe("1010"))  # offset distance 2 from both codewords
        assert vid is REJECT
        assert not scheme.pic(scheme.pie_support(fe("0000"))[0][1].pi, vid)

    def test_pir_pic_deterministic(self, fc_scheme):
        rng = substream(2, "det")
        x = FeatureElement(7, 77)
        pt = fc_scheme.pie(x, rng)
        probe = FeatureElement(7, 12)
        first_vid = fc_scheme.pir(pt.alpha, probe)
        first_pic = fc_scheme.pic(pt.pi, first_vid)
        for _ in range(10_000):
            assert fc_scheme.pir(pt.alpha, probe) == first_vid
        for _ in range(10_000):
            assert fc_scheme.pic(pt.pi, first_vid) == first_pic

    def test_threshold_compatibility(self, fc_scheme):
        assert fc_scheme.threshold_compatible(0)
        assert fc_scheme.threshold_compatible(1)
        assert not fc_scheme.threshold_compatible(2)

    def test_pie_support_is_uniform_over_codewords(self, fc_scheme):
        support = fc_scheme.pie_support(FeatureElement(7, 9))
        assert len(support) == 16
        assert all(p == pytest.approx(1 / 16) for p, _ in support)
        assert len({pt.alpha.value for _, pt in support}) == 16


class TestRotationScheme:
    def test_isometry(self):
        scheme = RotationScheme(7, tau=1)
        rng = substream(3, "rot")
        for _ in range(100):
            x = FeatureElement(7, int(rng.integers(128)))
            y = FeatureElement(7, int(rng.integers(128)))
            r = int(rng.integers(7))
            assert hamming_distance(x.rotate(r), y.rotate(r)) == hamming_distance(x, y)

    def test_mated_pair_matches(self):
        scheme = RotationScheme(7, tau=1)
        rng = substream(4, "rot2")
        x = FeatureElement(7, 99)
        pt = scheme.pie(x, rng)
        assert scheme.pic(pt.pi, scheme.pir(pt.alpha, x))

    def test_full_template_inverts_exactly(self):
        scheme = RotationScheme(7, tau=1)
        rng = substream(5, "rot3")
        for v in (0, 1, 64, 127):
            x = FeatureElement(7, v)
            pt = scheme.pie(x, rng)
            assert pt.pi.rotate(-pt.alpha) == x

    def test_support_enumerates_offsets(self):
        scheme = RotationScheme(7, tau=1)
        support = scheme.pie_support(FeatureElement(7, 3))
        assert len(support) == 7
        assert {pt.alpha for _, pt in support} == set(range(7))


class TestPlaintextScheme:
    def test_mated_pair_matches(self):
        scheme = PlaintextScheme(7, tau=1)
        rng = substream(6, "pl")
        x = FeatureElement(7, 42)
        pt = scheme.pie(x, rng)
        assert scheme.pic(pt.pi, scheme.pir(pt.alpha, x))

    def test_template_reveals_feature(self):
        scheme = PlaintextScheme(7, tau=0)
        rng = substream(7, "pl2")
        x = FeatureElement(7, 42)
        pt = scheme.pie(x, rng)
        assert pt.pi == x
        assert pt.alpha is None

    @given(st.integers(0, 127), st.integers(0, 127), st.integers(0, 3))
    @settings(max_examples=40)
    def test_match_is_distance_test(self, a, b, tau):
        scheme = PlaintextScheme(7, tau=tau)
        x, xp = FeatureElement(7, a), FeatureElement(7, b)
        pt = scheme.pie(x, substream(8, "pl3"))
        assert scheme.pic(pt.pi, scheme.pir(pt.alpha, xp)) == (
            hamming_distance(x, xp) <= tau
        )


class TestThresholdCompatibility:
    """d(x, x') <= tau must force acceptance of a template of x."""

    def test_rotation_exhaustive(self):
        scheme = RotationScheme(7, tau=1)
        assert scheme.threshold_compatible(1)
        for xv in range(128):
            x = FeatureElement(7, xv)
            for _, pt in scheme.pie_support(x):
                for pv in range(128):
                    probe = FeatureElement(7, pv)
                    if hamming_distance(x, probe) <= 1:
                        assert scheme.pic(pt.pi, scheme.pir(pt.alpha, probe))

    def test_plaintext_exhaustive(self):
        scheme = PlaintextScheme(7, tau=1)
        for xv in range(128):
            x = FeatureElement(7, xv)
            pt = scheme.pie_support(x)[0][1]
            for pv in range(128):
                probe = FeatureElement(7, pv)
                if hamming_distance(x, probe) <= 1:
                    assert scheme.pic(pt.pi, scheme.pir(pt.alpha, probe))


class TestRegistry:
    def test_unknown_scheme(self):
        with pytest.raises(ConfigError):
            build_scheme({"scheme": "nope"}, 7)

    def test_generator_from_config(self):
        scheme = build_scheme(
            {"scheme": "fc",
             "code": {"generator": ["1000110", "0100101", "0010011", "0001111"],
                      "t": 1}},
            7,
        )
        assert scheme.code.min_distance == 3

    def test_code_length_must_match_dimension(self):
        with pytest.raises(ConfigError):
            build_scheme({"scheme": "fc", "code": {"n": 7, "k": 4}}, 8)
