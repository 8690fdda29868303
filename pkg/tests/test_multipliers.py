import numpy as np
import pytest

from dunkl_lab import (
    GridFunction,
    apply_multiplier,
    hormander_norm,
    imaginary_power_symbol,
    riesz_symbol,
    riesz_transform,
    t1_identity_audit,
    validate_atom,
)
from dunkl_lab.multipliers import (
    AtomRecord,
    homogeneity_audit,
    identity_symbol,
    localized_kernel_audit,
)


def test_identity_multiplier(family):
    rep = t1_identity_audit(family[0])
    assert rep.passed
    assert rep.details["relative_error"] <= 1e-10


def test_riesz_antisymmetry(family):
    # -i xi/||xi|| maps even real data to odd imaginary-free data (up to
    # the real cast); R_0 applied twice gives -identity on band functions
    f = family[0]
    rf = apply_multiplier(f, riesz_symbol(0))
    rrf = apply_multiplier(rf, riesz_symbol(0))
    err = np.max(np.abs(rrf.values + f.values)) / np.max(np.abs(f.values))
    assert err <= 1e-6


def test_riesz_transform_wrapper(family):
    a = riesz_transform(family[0], 0)
    b = apply_multiplier(family[0], riesz_symbol(0))
    assert np.max(np.abs(a.values - b.values)) \
        <= 1e-12 * np.max(np.abs(b.values))


def test_hormander_norm_riesz_finite():
    top, per_t = hormander_norm(riesz_symbol(0), 1)
    assert np.isfinite(top) and top > 0
    assert np.all(np.isfinite(per_t))


def test_hormander_mikhlin_flavor():
    top, _ = hormander_norm(riesz_symbol(0), 1, flavor="mikhlin")
    assert np.isfinite(top) and top > 0


def test_homogeneity_spread():
    rep = homogeneity_audit(imaginary_power_symbol(1.5), 1)
    assert rep.passed
    assert rep.details["spread"] <= 1e-6


def test_imaginary_power_modulus_one(family):
    # |m| = 1 pointwise, so the L2(dw) norm is preserved
    f = family[0]
    g = apply_multiplier(f, imaginary_power_symbol(2.0))
    w = f.grid.weights
    n_f = float(np.sum(np.abs(f.values) ** 2 * w))
    n_g = float(np.sum(np.abs(g.values) ** 2 * w))
    assert n_g == pytest.approx(n_f, rel=1e-8)


def test_localized_kernel_decay(norm_grid):
    rep = localized_kernel_audit(riesz_symbol(0), norm_grid, (0, 1),
                                 probes=(0.5, 2.0))
    assert rep.passed, rep.details


def _make_atom(grid, center=1.0, scale=0.5, cancel=True):
    x = grid.flat_nodes()[:, 0]
    bump = np.exp(-((x - center) / scale) ** 2)
    prof = bump * (x - center) / scale
    w = grid.weights.ravel()
    if cancel:
        # project out the dw-mean (oddness alone is not enough: the
        # weight is not symmetric about the cube center)
        prof = prof - bump * float(np.sum(prof * w) / np.sum(bump * w))
    mass = float(np.sum(w[np.abs(x - center) <= scale]))
    peak = np.max(np.abs(prof))
    vals = prof / (peak * mass ** 0.5) * 0.5
    return AtomRecord(0, 0, 1.0, vals, np.array([center]), scale, scale,
                      mass)


def test_validate_atom_accepts_synthetic(small_grid):
    atom = _make_atom(small_grid)
    rep = validate_atom(atom, small_grid, p=2.0)
    assert rep.passed, rep.details


def test_validate_atom_clause_names(small_grid):
    rep = validate_atom(_make_atom(small_grid), small_grid, p=2.0)
    assert set(rep.details["clauses"]) == {"support", "size", "lipschitz",
                                           "cancellation"}


def test_validate_atom_rejects_dc(small_grid):
    atom = _make_atom(small_grid, cancel=False)
    rep = validate_atom(atom, small_grid, p=2.0)
    assert not rep.details["clauses"]["cancellation"]["passed"]
