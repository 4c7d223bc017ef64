import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fleetcap.generate import GenSpec, generate
from fleetcap.ilp import (
    KINDS,
    VarIndexMap,
    build_ilp,
    encode_solution,
    export_lp_text,
    extract_solution,
)
from fleetcap.model import (
    ConfigurationError,
    DimensionError,
    Dimensions,
    ModelOptions,
    Solution,
    Variant,
    check_feasible,
    evaluate_objective,
)

from conftest import make_t0, random_assignment, small_random_instance

GOLDEN = Path(__file__).parent / "data"


def counts(I, J, M, T, enhanced=False):
    cols = 2 * I * J * M * T + 4 * I * M * T
    rows = 4 * I * M * T + J * T + 1 + (1 if enhanced else 0)
    return cols, rows


@pytest.mark.parametrize("dims", [(1, 1, 1, 1), (2, 3, 2, 2), (3, 2, 1, 4), (5, 5, 3, 2)])
def test_model_size_formulas(dims):
    inst = generate(GenSpec(Dimensions(*dims), seed=3))
    p, vm = build_ilp(inst)
    assert (p.n_cols, p.n_rows) == counts(*dims)
    assert vm.n_cols == p.n_cols
    p2, _ = build_ilp(inst.with_cap(1e9), Variant.ENHANCED)
    assert (p2.n_cols, p2.n_rows) == counts(*dims, enhanced=True)


def test_size_2x3x2x2():
    inst = generate(GenSpec(Dimensions(2, 3, 2, 2), seed=1))
    p, _ = build_ilp(inst)
    assert p.n_cols == 80 and p.n_rows == 39
    p, _ = build_ilp(inst.with_cap(500.0), "enhanced")
    assert p.n_rows == 40


def test_enhanced_requires_cap(t0):
    with pytest.raises(ConfigurationError):
        build_ilp(t0, Variant.ENHANCED)


def test_infinite_cap_omits_emission_row(t0):
    p_base, _ = build_ilp(t0)
    p_inf, _ = build_ilp(t0.with_cap(math.inf), Variant.ENHANCED)
    assert p_inf.rows == p_base.rows


def test_index_map_is_bijective():
    vm = VarIndexMap(Dimensions(2, 3, 2, 2))
    seen = set()
    for col in range(vm.n_cols):
        kind, idx = vm.key(col)
        assert vm.column(kind, *idx) == col
        seen.add((kind, idx))
    assert len(seen) == vm.n_cols == 80
    # kind-major layout
    assert [vm.key(vm.offsets[k])[0] for k in KINDS] == list(KINDS)


def test_column_bounds(t0):
    p, vm = build_ilp(t0)
    assert p.ub[vm.column("x", 0, 0, 0, 0)] == 2
    assert p.ub[vm.column("xr", 0, 0, 0, 0)] == 1
    assert p.ub[vm.column("y", 0, 0, 0)] == 2
    assert math.isinf(p.ub[vm.column("q", 0, 0, 0)])
    p2, vm2 = build_ilp(t0, options=ModelOptions(bound_service=True))
    assert p2.ub[vm2.column("q", 0, 0, 0)] == 2 and p2.ub[vm2.column("qr", 0, 0, 0)] == 1


def test_per_mode_demand_rows():
    inst = generate(GenSpec(Dimensions(2, 3, 2, 2), seed=1))
    p, _ = build_ilp(inst, options=ModelOptions(per_mode_demand=True))
    assert p.n_rows == 4 * 8 + 3 * 2 * 2 + 1


# -- extract / encode -----------------------------------------------------


def test_round_trip_t0(t0):
    _, vm = build_ilp(t0)
    s = Solution.from_trips(t0, np.ones((1, 1, 1, 1)), np.zeros((1, 1, 1, 1)))
    assert extract_solution(encode_solution(s, vm), vm) == s


def test_extract_zero_and_single():
    vm = VarIndexMap(Dimensions(2, 3, 2, 2))
    assert extract_solution(np.zeros(vm.n_cols), vm) == Solution.zeros(vm.dims)
    v = np.zeros(vm.n_cols)
    v[vm.column("x", 0, 0, 0, 0)] = 2
    s = extract_solution(v, vm)
    assert s.x[0, 0, 0, 0] == 2 and s.x.sum() == 2
    assert s.xr.sum() == s.y.sum() == s.q.sum() == 0


def test_extract_length_mismatch():
    vm = VarIndexMap(Dimensions(1, 1, 1, 1))
    with pytest.raises(DimensionError):
        extract_solution(np.zeros(5), vm)


def test_extract_rejects_fractional():
    vm = VarIndexMap(Dimensions(1, 1, 1, 1))
    v = np.zeros(vm.n_cols)
    v[0] = 0.5
    with pytest.raises(ValueError):
        extract_solution(v, vm)


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**31), enhanced=st.booleans())
def test_builder_matches_checker(seed, enhanced):
    inst = small_random_instance(seed)
    rng = np.random.default_rng(seed)
    variant = Variant.BASE
    if enhanced:
        inst = inst.with_cap(float(rng.uniform(0, 1500)))
        variant = Variant.ENHANCED
    p, vm = build_ilp(inst, variant)
    s = random_assignment(inst, rng)
    v = encode_solution(s, vm)
    assert (not check_feasible(inst, s, variant)) == p.is_feasible(v)
    assert float(p.c @ v) == pytest.approx(evaluate_objective(inst, s), rel=1e-12, abs=1e-9)


# -- LP export ------------------------------------------------------------


def _rows(text):
    """Constraint name -> full (unwrapped) row text."""
    body = text.split("Subject To\n")[1].split("Bounds\n")[0]
    rows, cur = {}, None
    for ln in body.splitlines():
        if ln.startswith("    ") and cur:
            rows[cur] += " " + ln.strip()
        else:
            cur, _, rest = ln.strip().partition(": ")
            rows[cur] = rest
    return rows


def _row_line(text, name):
    return f"{name}: {_rows(text)[name]}"


def test_export_t0_demand_row(t0):
    text = export_lp_text(*build_ilp(t0))
    assert _row_line(text, "demand_1_1").endswith(">= 1")
    assert "Generals" in text and text.rstrip().endswith("End")


def test_export_zero_demand_rhs():
    inst = generate(GenSpec(Dimensions(2, 3, 2, 2), seed=4, demand=(0, 0)))
    text = export_lp_text(*build_ilp(inst))
    dem = [r for name, r in _rows(text).items() if name.startswith("demand_")]
    assert len(dem) == 6 and all(r.endswith(">= 0") for r in dem)


def test_export_emission_row(t0):
    text = export_lp_text(*build_ilp(t0.with_cap(80), "enhanced"))
    assert _row_line(text, "emission").strip() == "emission: 100 x_1_1_1_1 + 70 xr_1_1_1_1 <= 80"


def test_export_golden_t0(t0):
    text = export_lp_text(*build_ilp(t0))
    assert text == (GOLDEN / "t0_base.lp").read_text(encoding="utf-8")


def test_export_is_deterministic():
    inst = generate(GenSpec(Dimensions(2, 3, 2, 2), seed=9))
    assert export_lp_text(*build_ilp(inst)) == export_lp_text(*build_ilp(inst))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_export_reparses_with_highs(tmp_path, seed):
    highspy = pytest.importorskip("highspy")
    inst = generate(GenSpec(Dimensions(2, 3, 2, 2), seed=seed))
    cap = 600.0
    p, vm = build_ilp(inst.with_cap(cap), "enhanced")
    f = tmp_path / "m.lp"
    f.write_text(export_lp_text(p, vm), encoding="utf-8")
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.readModel(str(f))
    lp = h.getLp()
    assert (lp.num_col_, lp.num_row_) == (p.n_cols, p.n_rows)
    # HiGHS may reorder columns by first appearance; compare through names
    pos = {name: k for k, name in enumerate(lp.col_names_)}
    order = [pos[vm.name(c)] for c in range(p.n_cols)]
    assert np.allclose(np.array(lp.col_cost_)[order], p.c)
    assert np.allclose(np.array(lp.col_upper_)[order], np.minimum(p.ub, highspy.kHighsInf))
    A = np.zeros((lp.num_row_, lp.num_col_))
    a = lp.a_matrix_
    for col in range(lp.num_col_):
        for k in range(a.start_[col], a.start_[col + 1]):
            A[a.index_[k], col] = a.value_[k]
    assert np.allclose(A[:, order], p.A)
