import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from markersim.marker import (
    BoardCell,
    FamilyKind,
    MarkerConfig,
    MarkerFamily,
    NoiseProfile,
    Screen,
    board_layout,
    camera_freedom_angle,
    clamp_to_screen,
    optimal_marker_size,
)

SQUARE_SCREEN = Screen(0.15, 0.15)


class TestSizeRule:
    def test_zero_distance_gives_zero(self):
        assert optimal_marker_size(0.5, 0.0, 1.0) == 0.0

    def test_consistent_variant_direct_evaluation(self):
        # 2 * 2 * tan(1 * 0.5 / 2) = 4 * tan(0.25)
        assert optimal_marker_size(0.5, 2.0, 1.0, "consistent") == pytest.approx(
            1.021367684884145, abs=1e-12
        )

    def test_verbatim_variant_direct_evaluation(self):
        # 2 * 2 * tan(0.5 * 0.5) = 4 * tan(0.25)
        assert optimal_marker_size(0.5, 2.0, 0.5, "verbatim") == pytest.approx(
            1.021367684884145, abs=1e-12
        )

    @pytest.mark.parametrize("bad", [0.0, -0.1, 1.0001])
    def test_scale_fraction_domain(self, bad):
        with pytest.raises(ValueError):
            optimal_marker_size(0.5, 2.0, bad)

    def test_verbatim_tangent_pole(self):
        with pytest.raises(ValueError, match="pole"):
            optimal_marker_size(1.7, 2.0, 1.0, "verbatim")

    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            optimal_marker_size(0.5, 2.0, 0.5, "exact")

    @given(
        fov=st.floats(0.05, 1.5),
        h1=st.floats(0.01, 20.0),
        h2=st.floats(0.01, 20.0),
        s=st.floats(0.01, 1.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_strictly_increasing_in_distance(self, fov, h1, h2, s):
        if h1 == h2:
            return
        lo, hi = sorted((h1, h2))
        assert optimal_marker_size(fov, lo, s) < optimal_marker_size(fov, hi, s)
        if fov * max(h1, h2) < math.pi / 2:  # keep clear of the verbatim pole
            assert optimal_marker_size(fov, lo, s, "verbatim") < optimal_marker_size(
                fov, hi, s, "verbatim"
            )

    @given(
        fov=st.floats(0.05, 1.5),
        h=st.floats(0.01, 20.0),
        s1=st.floats(0.01, 0.99),
        s2=st.floats(0.01, 0.99),
    )
    @settings(max_examples=100, deadline=None)
    def test_strictly_increasing_in_scale_fraction(self, fov, h, s1, s2):
        if s1 == s2:
            return
        lo, hi = sorted((s1, s2))
        assert optimal_marker_size(fov, h, lo) < optimal_marker_size(fov, h, hi)


class TestFreedomAngle:
    def test_point_marker_leaves_half_fov(self):
        assert camera_freedom_angle(0.5, 0.0, 2.0) == pytest.approx(0.25, abs=1e-12)

    def test_consistency_with_size_rule_at_full_scale(self):
        size = optimal_marker_size(0.5, 2.0, 1.0, "consistent")
        assert camera_freedom_angle(0.5, size, 2.0) == pytest.approx(0.0, abs=1e-9)

    def test_negative_when_marker_overflows(self):
        size = optimal_marker_size(0.5, 2.0, 1.0, "consistent")
        expected = 0.25 - math.atan(size / 2.0)  # oracle: direct formula at h = 1
        assert expected < 0
        assert camera_freedom_angle(0.5, size, 1.0) == pytest.approx(expected, abs=1e-12)

    def test_nonpositive_distance_rejected(self):
        with pytest.raises(ValueError):
            camera_freedom_angle(0.5, 0.1, 0.0)

    @given(
        fov=st.floats(0.05, 1.5),
        h=st.floats(0.05, 20.0),
        m1=st.floats(1e-4, 2.0),
        m2=st.floats(1e-4, 2.0),
    )
    @settings(max_examples=100, deadline=None)
    def test_decreasing_in_size_increasing_in_distance(self, fov, h, m1, m2):
        if abs(m1 - m2) > 1e-9:
            lo, hi = sorted((m1, m2))
            assert camera_freedom_angle(fov, hi, h) < camera_freedom_angle(fov, lo, h)
        assert camera_freedom_angle(fov, m1, h) < camera_freedom_angle(fov, m1, 2 * h)


class TestClamp:
    def test_under_limit_untouched(self):
        assert clamp_to_screen(0.10, SQUARE_SCREEN) == 0.10

    def test_capped_at_screen_limit(self):
        assert clamp_to_screen(0.80, SQUARE_SCREEN) == 0.15

    def test_zero(self):
        assert clamp_to_screen(0.0, SQUARE_SCREEN) == 0.0

    def test_fill_factor(self):
        assert clamp_to_screen(0.80, SQUARE_SCREEN, fill_factor=0.8) == pytest.approx(0.12)


class TestBoardLayout:
    def test_single_cell_when_cell_fills_screen(self):
        cells = board_layout(SQUARE_SCREEN, 0.15, gap_fraction=0.0)
        assert len(cells) == 1
        assert cells[0] == BoardCell(0.0, 0.0, 0.15)

    def test_three_by_three(self):
        assert len(board_layout(SQUARE_SCREEN, 0.05, gap_fraction=0.0)) == 9

    def test_rectangular_screen_per_axis_floors(self):
        assert len(board_layout(Screen(0.15, 0.10), 0.05, gap_fraction=0.0)) == 6

    def test_cell_larger_than_screen_rejected(self):
        with pytest.raises(ValueError):
            board_layout(SQUARE_SCREEN, 0.2)

    @given(
        w=st.floats(0.05, 1.0),
        h=st.floats(0.05, 1.0),
        frac=st.floats(0.05, 1.0),
        gap=st.floats(0.0, 0.8),
    )
    @settings(max_examples=150, deadline=None)
    def test_cells_disjoint_and_inside_screen(self, w, h, frac, gap):
        screen = Screen(w, h)
        cells = board_layout(screen, frac * screen.min_dim, gap_fraction=gap)
        assert len(cells) >= 1
        for c in cells:
            assert abs(c.center_x) + c.size / 2 <= w / 2 + 1e-9
            assert abs(c.center_y) + c.size / 2 <= h / 2 + 1e-9
        for i, a in enumerate(cells):
            for b in cells[i + 1 :]:
                half = (a.size + b.size) / 2
                assert (
                    abs(a.center_x - b.center_x) >= half - 1e-9
                    or abs(a.center_y - b.center_y) >= half - 1e-9
                )


class TestTypes:
    def test_noise_profile_power_law(self):
        p = NoiseProfile(0.02, 1.0)
        assert p.sigma_at(3.0) == pytest.approx(0.06)
        assert NoiseProfile(0.02, 0.0).sigma_at(13.0) == 0.02

    def test_family_defaults_carry_measured_ranges(self):
        full = MarkerFamily.full_pose_default()
        longr = MarkerFamily.long_range_default()
        assert full.max_detection_range == 4.4 and full.yields_yaw
        assert longr.max_detection_range == 13.181 and not longr.yields_yaw
        assert longr.yaw_noise is None

    def test_yaw_noise_without_yaw_rejected(self):
        with pytest.raises(ValueError):
            MarkerFamily(
                kind=FamilyKind.LONG_RANGE_POSITION_ONLY,
                max_detection_range=10.0,
                min_pixel_footprint=20.0,
                yields_yaw=False,
                position_noise=NoiseProfile(0.01, 0.0),
                yaw_noise=NoiseProfile(0.01, 0.0),
            )

    def test_marker_config_requires_size_within_screen_limit(self):
        fam = MarkerFamily.full_pose_default()
        with pytest.raises(ValueError):
            MarkerConfig.single(0, fam, 0.2, 0.15)
        with pytest.raises(ValueError):
            MarkerConfig.single(0, fam, 0.0, 0.15)

    def test_marker_config_rejects_overlapping_cells(self):
        fam = MarkerFamily.full_pose_default()
        with pytest.raises(ValueError, match="overlap"):
            MarkerConfig(
                config_id=0,
                family=fam,
                marker_size=0.05,
                board=(BoardCell(0.0, 0.0, 0.05), BoardCell(0.01, 0.0, 0.05)),
                screen_limit=0.15,
            )
