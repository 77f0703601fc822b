from __future__ import annotations

import numpy as np
import pytest

from elliprmt.covariance import (ScmBundle, bilinear_resolvent, build_scm,
                                 spike_determinant_residual, spiked_quadform, vesd)
from elliprmt.errors import ConfigError, DomainError, PoleError
from elliprmt.lsd import solve_lsd
from elliprmt.measures import DiscreteMeasure, RadiusLaw
from elliprmt.sampler import PopulationSpec, build_population, draw_sample


def _identity_sample(p, n, seed=0, nu=0.0, kind="deterministic"):
    spec = PopulationSpec(p=p, spikes=(), bulk=(1.0,) * p)
    law = RadiusLaw(kind, p=p, nu_p=nu)
    return draw_sample(spec, law, n, seed)


def _spiked_sample(p, n, spikes=(8.0,), seed=0):
    spec = PopulationSpec(p=p, spikes=spikes, bulk="uniform", bulk_seed=99,
                          toeplitz_rho=0.9)
    law = RadiusLaw("deterministic", p=p, nu_p=0.0)
    return draw_sample(spec, law, n, seed), spec


def test_scm_reconstruction_and_normalization():
    sample = _identity_sample(20, 40, seed=1, nu=20.0, kind="two-point")
    bundle = build_scm(sample)
    scale = np.sqrt(20 ** 2 / sample.law.m_p)
    direct = scale / 40 * sample.data @ sample.data.T
    rel = np.linalg.norm(bundle.matrix - direct) / np.linalg.norm(direct)
    assert rel < 1e-9
    assert bundle.normalization == pytest.approx(scale)
    v = bundle.eigenvectors
    assert np.linalg.norm(v.T @ v - np.eye(20)) < 1e-9
    assert np.all(np.diff(bundle.eigenvalues) >= 0)


def test_rank_one_scm():
    sample = _identity_sample(12, 1, seed=2)
    bundle = build_scm(sample)
    assert np.sum(np.abs(bundle.eigenvalues) < 1e-10) == 11


def test_mp_edge_at_square_aspect():
    sample = _identity_sample(400, 400, seed=3)
    bundle = build_scm(sample)
    assert bundle.eigenvalues[-1] < 4.5  # (1+sqrt(1))^2 = 4 plus finite-p slack


def test_spiked_scm_top_eigenvalue_near_prediction():
    # p=50, n=100 spiked model: largest eigenvalue near the mapped location
    sample, spec = _spiked_sample(50, 100, seed=4)
    bundle = build_scm(sample)
    from elliprmt.sampler import nonspiked_spectrum_measure
    from elliprmt.spikes import transition
    h1n = nonspiked_spectrum_measure(spec)
    theta, _ = transition(0.5, h1n, DiscreteMeasure.point_mass(1.0), 8.0)
    assert abs(bundle.eigenvalues[-1] - theta) < 4 * theta / np.sqrt(100)


def test_companion_spectrum_identity():
    sample = _identity_sample(15, 9, seed=5, nu=15.0, kind="two-point")
    bundle = build_scm(sample)
    scale = np.sqrt(15 ** 2 / sample.law.m_p)
    companion = scale / 9 * sample.data.T @ sample.data
    comp_ev = np.linalg.eigvalsh(companion)
    ev = bundle.eigenvalues
    nonzero = ev[np.abs(ev) > 1e-10]
    comp_nonzero = comp_ev[np.abs(comp_ev) > 1e-10]
    assert nonzero.size == comp_nonzero.size
    assert np.allclose(np.sort(nonzero), np.sort(comp_nonzero), atol=1e-8)


def test_zero_matrix_resolvent():
    p = 6
    bundle = ScmBundle(matrix=np.zeros((p, p)), eigenvalues=np.zeros(p),
                       eigenvectors=np.eye(p), normalization=1.0)
    pi = np.full(p, 1 / np.sqrt(p))
    assert abs(bilinear_resolvent(bundle, pi, pi, 1j) - 1j) < 1e-14


def test_eigenvector_resolvent():
    sample = _identity_sample(10, 30, seed=6)
    bundle = build_scm(sample)
    v1 = bundle.eigenvectors[:, 0]
    z = 0.3 + 0.2j
    expect = 1.0 / (bundle.eigenvalues[0] - z)
    assert abs(bilinear_resolvent(bundle, v1, v1, z) - expect) < 1e-12


def test_resolvent_matches_mp_transform():
    sample = _identity_sample(400, 800, seed=7)
    bundle = build_scm(sample)
    pi = np.zeros(400)
    pi[0] = 1.0
    z = 1 + 1j
    d1 = DiscreteMeasure.point_mass(1.0)
    m = solve_lsd(0.5, d1, d1, z).m
    assert abs(bilinear_resolvent(bundle, pi, pi, z) - m) < 0.05


def test_resolvent_validations():
    sample = _identity_sample(8, 16, seed=8)
    bundle = build_scm(sample)
    with pytest.raises(DomainError, match="unit norm"):
        bilinear_resolvent(bundle, np.ones(8), np.ones(8) / np.sqrt(8), 1j)
    with pytest.raises(PoleError):
        bilinear_resolvent(bundle, np.eye(8)[0], np.eye(8)[0],
                           complex(bundle.eigenvalues[3]))


def test_trace_identity_with_esd_transform():
    sample = _identity_sample(30, 60, seed=9)
    bundle = build_scm(sample)
    z = 0.9 + 0.7j
    total = sum(bilinear_resolvent(bundle, np.eye(30)[k], np.eye(30)[k], z)
                for k in range(30)) / 30
    esd_transform = np.mean(1.0 / (bundle.eigenvalues - z))
    assert abs(total - esd_transform) < 1e-10


def test_positive_imaginary_part_for_diagonal_forms():
    sample = _identity_sample(20, 40, seed=10)
    bundle = build_scm(sample)
    rng = np.random.default_rng(0)
    pi = rng.standard_normal(20)
    pi /= np.linalg.norm(pi)
    val = bilinear_resolvent(bundle, pi, pi, 0.5 + 0.3j)
    assert val.imag > 0


# --- VESD --------------------------------------------------------------------

def test_vesd_mass_and_monotone():
    sample = _identity_sample(25, 50, seed=11)
    bundle = build_scm(sample)
    rng = np.random.default_rng(1)
    pi = rng.standard_normal(25)
    pi /= np.linalg.norm(pi)
    grid = np.linspace(0, 5, 80)
    out = vesd(bundle, pi, grid)
    assert abs(out.vesd[-1] - 1.0) < 1e-10
    assert abs(out.esd[-1] - 1.0) < 1e-12
    assert np.all(np.diff(out.vesd) >= -1e-15)
    assert np.all(np.diff(out.esd) >= 0)


def test_vesd_single_eigenvector_is_step():
    sample = _identity_sample(12, 24, seed=12)
    bundle = build_scm(sample)
    k = 5
    lam = bundle.eigenvalues[k]
    grid = np.array([lam - 1e-6, lam + 1e-6, 10.0])
    out = vesd(bundle, bundle.eigenvectors[:, k], grid)
    assert out.vesd[0] < 1e-12
    assert abs(out.vesd[1] - 1.0) < 1e-12


def test_vesd_basis_average_is_esd():
    sample = _identity_sample(10, 20, seed=13)
    bundle = build_scm(sample)
    grid = np.linspace(0, 4, 40)
    acc = np.zeros_like(grid)
    for k in range(10):
        acc += vesd(bundle, np.eye(10)[k], grid).vesd
    esd = vesd(bundle, np.eye(10)[0], grid).esd
    assert np.allclose(acc / 10, esd, atol=1e-12)


def test_vesd_haar_like_discrepancy():
    sample = _identity_sample(200, 400, seed=14)
    bundle = build_scm(sample)
    pi = np.zeros(200)
    pi[0] = 1.0
    grid = np.linspace(0, 4, 600)
    out = vesd(bundle, pi, grid)
    assert np.max(np.abs(out.vesd - out.esd)) < 0.15


def test_vesd_csv(tmp_path):
    sample = _identity_sample(6, 12, seed=15)
    bundle = build_scm(sample)
    out = vesd(bundle, np.eye(6)[0], np.linspace(0, 4, 5))
    path = tmp_path / "vesd.csv"
    out.write_csv(path)
    assert path.read_text().splitlines()[0] == "x,esd,vesd"


# --- spiked determinant equation ---------------------------------------------

def test_spike_determinant_vanishes_at_sample_spike():
    sample, spec = _spiked_sample(60, 120, seed=16)
    bundle = build_scm(sample)
    lam1 = bundle.eigenvalues[-1]
    assert spike_determinant_residual(sample, lam1) < 1e-6


def test_spike_determinant_far_field():
    sample, _ = _spiked_sample(40, 80, seed=17)
    assert abs(spike_determinant_residual(sample, 1e6) - 1 / 8) < 1e-3


def test_spike_determinant_requires_spikes():
    sample = _identity_sample(10, 20, seed=18)
    with pytest.raises(ConfigError):
        spike_determinant_residual(sample, 5.0)


def test_spiked_quadform_pole_detection():
    sample, _ = _spiked_sample(40, 80, seed=19)
    with pytest.raises(PoleError):
        spiked_quadform(sample, 1e-3)
