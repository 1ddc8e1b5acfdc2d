import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays
from scipy.signal import medfilt

from stbi.autofocus import mean_phase, select_focus, total_variation, write_tv_csv
from stbi.errors import EmptyInputError
from stbi.field_core import Hologram, PhaseMap
from stbi.simulator import FocusStack


def step_frame(a):
    # TV of [[0, a], [0, a]] is 2a
    return Hologram(np.array([[0.0, a], [0.0, a]]), 0.48)


def stack_with_tv(values):
    return FocusStack([step_frame(v / 2) for v in values], 1.0, 0.0)


images = arrays(np.float64, st.tuples(st.integers(2, 12), st.integers(2, 12)),
                elements=st.floats(0, 100, allow_nan=False))


def test_constant_image_zero():
    assert total_variation(Hologram(np.full((8, 9), 3.3), 1.0)) == 0.0


def test_hand_example():
    assert total_variation(np.array([[0.0, 1.0], [0.0, 1.0]])) == 2.0


def test_anisotropic_flag():
    img = np.array([[0.0, 1.0], [1.0, 0.0]])
    # (0,0): gx=1, gy=1; (0,1): gy=-1; (1,0): gx=-1
    assert total_variation(img, isotropic=False) == pytest.approx(4.0)
    assert total_variation(img) == pytest.approx(np.sqrt(2) + 2.0)


def test_homogeneity(rng):
    img = rng.random((32, 40))
    assert total_variation(3 * img) == pytest.approx(3 * total_variation(img), rel=1e-12)


@settings(max_examples=50)
@given(images, st.floats(-50, 50))
def test_shift_invariance(img, c):
    assert abs(total_variation(img + c) - total_variation(img)) <= 1e-12 * max(1.0, total_variation(img)) + 1e-9


@settings(max_examples=50)
@given(images)
def test_tv_nonnegative_and_zero_only_when_constant(img):
    tv = total_variation(img)
    assert tv >= 0
    assert (tv == 0) == bool(np.all(img == img.flat[0]))


def test_select_argmax_example():
    k, curve = select_focus(stack_with_tv([1.0, 3.0, 2.0]), stride=1)
    assert k == 1
    assert [i for i, _ in curve] == [0, 1, 2]
    assert [tv for _, tv in curve] == pytest.approx([1.0, 3.0, 2.0])


def test_ties_go_to_lowest_index():
    k, _ = select_focus(stack_with_tv([1.0, 3.0, 2.0, 3.0]), stride=1)
    assert k == 1


def test_strided_frames_evaluated():
    stack = stack_with_tv(np.linspace(1, 2, 90))
    k, curve = select_focus(stack, stride=30)
    assert [i for i, _ in curve] == [0, 30, 60]
    assert k == 60


def test_refine_evaluates_neighbourhood():
    tv = np.r_[np.arange(1, 51), np.arange(50, 0, -1)] + 0.0  # peak at 49, 50 (tie)
    tv[47] = 60
    k, curve = select_focus(stack_with_tv(tv), stride=10, refine=True)
    evaluated = [i for i, _ in curve]
    assert k == 47
    # coarse grid plus everything within +-10 of the coarse winner
    assert set(range(40, 61)) <= set(evaluated)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0, 100), min_size=1, max_size=25))
def test_stride_one_is_exhaustive_argmax(tvs):
    k, _ = select_focus(stack_with_tv(tvs), stride=1)
    measured = [total_variation(step_frame(v / 2)) for v in tvs]
    assert k == int(np.argmax(measured))


def test_empty_stack_rejected():
    with pytest.raises(EmptyInputError):
        select_focus(FocusStack([], 1.0), stride=1)


def test_mean_phase_examples():
    assert mean_phase(PhaseMap(np.full((5, 7), 0.7), 1.0)) == pytest.approx(0.7)
    w = 64
    ramp = np.tile(np.linspace(0, 1, w), (10, 1))
    assert abs(mean_phase(PhaseMap(ramp, 1.0)) - 0.5) <= 1 / w
    two = np.zeros((4, 8))
    two[:, 4:] = np.pi
    assert mean_phase(PhaseMap(two, 1.0)) == pytest.approx(np.pi / 2)
    with pytest.raises(EmptyInputError):
        mean_phase(PhaseMap(two, 1.0), np.zeros((4, 8), bool))


def test_mean_phase_respects_mask():
    vals = np.arange(12.0).reshape(3, 4)
    mask = np.zeros((3, 4), bool)
    mask[1] = True
    assert mean_phase(PhaseMap(vals, 1.0), mask) == pytest.approx(5.5)


def test_tv_csv(tmp_path):
    stack = stack_with_tv([1.0, 3.0])
    _, curve = select_focus(stack, stride=1)
    p = tmp_path / "tv.csv"
    write_tv_csv(p, curve, stack)
    lines = p.read_text().splitlines()
    assert lines[0] == "index,defocus_um,tv"
    assert lines[2].split(",")[:2] == ["1", "1.0"]


@pytest.mark.slow
def test_demo_stack_tv_unimodal(demo_stack):
    stack, _ = demo_stack
    tv = medfilt(np.array([total_variation(f) for f in stack.frames]), 3)
    inner = tv[1:-1]
    strict_max = (inner > tv[:-2]) & (inner > tv[2:])
    # flat tops count as a single maximum
    plateau_max = 0
    i = 1
    while i < len(tv) - 1:
        j = i
        while j + 1 < len(tv) and tv[j + 1] == tv[i]:
            j += 1
        if tv[i] > tv[i - 1] and (j + 1 >= len(tv) or tv[j] > tv[j + 1]) and j - i + 1 <= 2:
            plateau_max += 1
        i = j + 1
    assert strict_max.sum() <= 1
    assert plateau_max <= 1
