"""Lamp geometry, absorption coefficient, propagation, channel metrics."""
from dataclasses import replace

import numpy as np
import pytest

import eitlamp as el
from eitlamp.errors import StepUnderflow
from eitlamp.model import TWO_PI


def test_standard_geometry_lengths():
    lamp = el.LampGeometry.standard()
    assert lamp.total_length == pytest.approx(0.26, rel=1e-12)
    roles = [seg.role for seg in lamp.segments]
    assert roles == list(el.lamp.SEGMENT_ORDER)
    active = [seg.active for seg in lamp.segments]
    assert active == [False, False, True, False, False]
    extended = el.LampGeometry.standard(vapor="extended")
    assert all(seg.active for seg in extended.segments)


def test_geometry_validation():
    with pytest.raises(ValueError):
        el.LampGeometry.standard(vapor="everywhere")
    with pytest.raises(ValueError):
        el.LampGeometry.standard(cathode=-0.02)
    segs = el.LampGeometry.standard().segments
    with pytest.raises(ValueError):
        el.LampGeometry(segments=segs[::-1])


def test_absorption_coefficient_no_atoms(ca, fig_drive, lamp_env):
    empty = replace(lamp_env, density=0.0)
    grid = el.make_velocity_grid(ca, empty, 32, rule="uniform")
    assert el.absorption_coefficient(ca, fig_drive, empty, grid) == 0.0


def test_absorption_coefficient_stationary_cross_section(ca, lamp_env):
    """Single stationary class, weak probe: alpha = N sigma0 = 3 N lambda^2/(2 pi)."""
    u = el.thermal_speed(ca, lamp_env)
    grid = el.VelocityGrid(nodes=np.array([0.0]), weights=np.array([1.0]), u=u)
    drive = el.DriveField(omega_p=1e-4 * ca.gamma1)
    alpha = el.absorption_coefficient(ca, drive, lamp_env, grid)
    expected = lamp_env.density * 3.0 * ca.lambda_p**2 / (2.0 * np.pi)
    assert alpha == pytest.approx(expected, rel=1e-6)


def test_absorption_reduced_by_coupling(ca, fig_drive, lamp_env, grid1024):
    with_coupling = el.absorption_coefficient(ca, fig_drive, lamp_env, grid1024)
    without = el.absorption_coefficient(ca, replace(fig_drive, omega_c=0.0),
                                        lamp_env, grid1024)
    assert with_coupling < without


def test_propagate_empty_lamp(ca, fig_drive, lamp_env):
    empty = replace(lamp_env, density=0.0)
    grid = el.make_velocity_grid(ca, empty, 16, rule="uniform")
    lamp = el.LampGeometry.standard()
    traces = el.propagate(lamp, ca, fig_drive, empty, grid, 850.0,
                          (-TWO_PI * 1e9, TWO_PI * 1e9), 5)
    np.testing.assert_array_equal(traces.transmission, 1.0)
    np.testing.assert_array_equal(traces.fluorescence, 0.0)
    np.testing.assert_array_equal(traces.optogalvanic, 0.0)


def test_propagate_validation(ca, fig_drive, lamp_env, grid1024):
    lamp = el.LampGeometry.standard()
    with pytest.raises(ValueError):
        el.propagate(lamp, ca, fig_drive, lamp_env, grid1024, 0.0, (-1e9, 1e9), 5)
    with pytest.raises(ValueError):
        el.propagate(lamp, ca, fig_drive, lamp_env, grid1024, 850.0, (1e9, -1e9), 5)


def test_propagate_step_underflow(ca, fig_drive, lamp_env):
    """Pathological opacity: the alpha dz rule would need sub-micron steps."""
    env = replace(lamp_env, density=lamp_env.density * 1e8)
    grid = el.make_velocity_grid(ca, env, 16, rule="uniform")
    lamp = el.LampGeometry.standard()
    with pytest.raises(StepUnderflow):
        el.propagate(lamp, ca, fig_drive, env, grid, 850.0,
                     (-TWO_PI * 1e6, TWO_PI * 1e6), 3)


def test_beer_lambert_constant_weak_absorption(ca, lamp_env):
    """Calibrate the density for alpha = 10 1/m at line center, send a very
    weak beam through the 2 cm cathode: transmission is exp(-0.2)."""
    grid0 = el.make_velocity_grid(ca, lamp_env, 64, rule="uniform")
    weak = el.DriveField(omega_p=1e-5 * ca.gamma1)
    alpha0 = el.absorption_coefficient(ca, weak, lamp_env, grid0)
    env = replace(lamp_env, density=lamp_env.density * 10.0 / alpha0)
    grid = el.make_velocity_grid(ca, env, 64, rule="uniform")
    assert el.absorption_coefficient(ca, weak, env, grid) == pytest.approx(10.0, rel=1e-9)

    lamp = el.LampGeometry.standard()
    span = TWO_PI * 1e6
    traces = el.propagate(lamp, ca, weak, env, grid, 1e-6, (-span, span), 3)
    center = traces.transmission[1]
    assert center == pytest.approx(np.exp(-10.0 * 0.020), abs=1e-6)


def test_energy_bookkeeping(thin_lamp_run):
    coupled, _ = thin_lamp_run
    absorbed_total = coupled.region_absorbed.sum(axis=1)
    expected = (1.0 - coupled.transmission) * coupled.intensity_in
    np.testing.assert_allclose(absorbed_total, expected,
                               rtol=1e-6, atol=1e-12 * coupled.intensity_in)


def test_optogalvanic_region_contains_fluorescence_region(thin_lamp_run, thick_lamp_run):
    for traces in (*thin_lamp_run, thick_lamp_run):
        assert np.all(traces.optogalvanic >= traces.fluorescence - 1e-15)


def test_transmission_monotone_in_column_density(ca, fig_drive, lamp_env):
    lamp = el.LampGeometry.standard()
    span = TWO_PI * 10e6
    values = []
    for mult in (0.3, 1.0, 3.0):
        env = replace(lamp_env, density=lamp_env.density * mult)
        grid = el.make_velocity_grid(ca, env, 256, rule="uniform")
        traces = el.propagate(lamp, ca, fig_drive, env, grid, 850.0, (-span, span), 3)
        values.append(traces.transmission[1])
    assert values[0] > values[1] > values[2]


def test_thin_medium_limit(ca, lamp_env):
    """(1 - T) / (alpha L) in [0.99, 1.0] for optical depth below 0.01."""
    grid0 = el.make_velocity_grid(ca, lamp_env, 128, rule="uniform")
    weak = el.DriveField(omega_p=1e-5 * ca.gamma1)
    alpha0 = el.absorption_coefficient(ca, weak, lamp_env, grid0)
    env = replace(lamp_env, density=lamp_env.density * 0.4 / alpha0)
    grid = el.make_velocity_grid(ca, env, 128, rule="uniform")
    alpha = el.absorption_coefficient(ca, weak, env, grid)
    assert alpha * 0.020 <= 0.01
    lamp = el.LampGeometry.standard()
    span = TWO_PI * 1e6
    traces = el.propagate(lamp, ca, weak, env, grid, 1e-6, (-span, span), 3)
    ratio = (1.0 - traces.transmission[1]) / (alpha * 0.020)
    assert 0.99 <= ratio <= 1.0


def test_channel_spectra_identical_runs(thin_lamp_run):
    coupled, _ = thin_lamp_run
    metrics = el.channel_spectra(coupled, coupled)
    for channel in ("transmission", "fluorescence", "optogalvanic"):
        assert metrics[channel].contrast == 0.0
        assert metrics[channel].found is False


def test_thin_channels_share_the_dip_window(thin_lamp_run):
    """Optically thin lamp: all three channels see the same dip width."""
    metrics = el.channel_spectra(*thin_lamp_run)
    widths = [metrics[ch].fwhm for ch in ("transmission", "fluorescence",
                                          "optogalvanic")]
    assert all(w is not None for w in widths)
    spread = (max(widths) - min(widths)) / min(widths)
    assert spread <= 0.10


@pytest.fixture(scope="module")
def moderate_depth_channels(ca, fig_drive, lamp_env):
    """Channel metrics at moderate optical depth (three baseline columns),
    vapor confined to the cathode. The dips are tens of MHz wide, so this
    needs the fully converged velocity grid."""
    lamp = el.LampGeometry.standard(vapor="cathode")
    env = replace(lamp_env, density=lamp_env.density * 3.0)
    grid = el.make_velocity_grid(ca, env, 2048, rule="uniform")
    rng = (-TWO_PI * 0.35e9, TWO_PI * 0.35e9)
    coupled = el.propagate(lamp, ca, fig_drive, env, grid, 850.0, rng, 41)
    reference = el.propagate(lamp, ca, replace(fig_drive, omega_c=0.0), env,
                             grid, 850.0, rng, 41)
    return el.channel_spectra(coupled, reference)


def test_thick_fluorescence_wider_than_transmission(moderate_depth_channels):
    """Optical thickness narrows a channel's dip (the transparency is
    amplified by exp of the released depth); the transmission channel sees
    the full column and comes out narrowest, the front-half fluorescence
    channel wider and deeper."""
    metrics = moderate_depth_channels
    assert metrics["transmission"].found and metrics["fluorescence"].found
    assert metrics["transmission"].fwhm < metrics["fluorescence"].fwhm
    assert metrics["transmission"].contrast < metrics["fluorescence"].contrast


def test_cathode_vapor_makes_optogalvanic_equal_transmission(moderate_depth_channels):
    """With vapor confined to the cathode the inter-anode region holds the
    entire absorbing column, so the optogalvanic and transmission channels
    carry the same dip."""
    metrics = moderate_depth_channels
    assert metrics["optogalvanic"].contrast == pytest.approx(
        metrics["transmission"].contrast, rel=1e-9)
    assert metrics["optogalvanic"].fwhm == pytest.approx(
        metrics["transmission"].fwhm, rel=1e-9)


@pytest.mark.xfail(
    strict=True,
    reason="The absorbed-power proxy cannot make the optogalvanic dip the "
           "widest channel: with cathode-confined vapor the inter-anode "
           "region contains the entire absorbing column (identical to "
           "transmission), and with extended vapor the entry column shields "
           "the region, narrowing and then inverting its dip. The observed "
           "widest-optogalvanic ordering involves the discharge response, "
           "which is out of scope. See the decisions ledger.")
def test_thick_optogalvanic_wider_than_transmission(ca, fig_drive, lamp_env):
    lamp = el.LampGeometry.standard(vapor="extended")
    env = replace(lamp_env, density=lamp_env.density)
    grid = el.make_velocity_grid(ca, env, 512, rule="uniform")
    rng = (-TWO_PI * 0.45e9, TWO_PI * 0.45e9)
    coupled = el.propagate(lamp, ca, fig_drive, env, grid, 850.0, rng, 41)
    reference = el.propagate(lamp, ca, replace(fig_drive, omega_c=0.0), env,
                             grid, 850.0, rng, 41)
    metrics = el.channel_spectra(coupled, reference)
    assert metrics["transmission"].found and metrics["optogalvanic"].found
    assert metrics["transmission"].fwhm < metrics["optogalvanic"].fwhm


def test_two_lobe_thick_lineshape(thick_lamp_run):
    """Probe-only, thirty baseline columns, vapor past the anodes: the
    inter-anode absorbed power shows two symmetric side lobes because the
    line center is fully absorbed before the first anode."""
    og = thick_lamp_run.optogalvanic
    det = thick_lamp_run.detunings
    interior = [i for i in range(1, len(og) - 1)
                if og[i] > og[i - 1] and og[i] > og[i + 1]]
    assert len(interior) == 2
    left, right = interior
    assert det[left] == pytest.approx(-det[right], abs=(det[1] - det[0]) / 2)
    for i in (left, right):
        assert TWO_PI * 1.0e9 <= abs(det[i]) <= TWO_PI * 2.0e9
    center = np.argmin(np.abs(det))
    assert og[center] < og[center - 1] and og[center] < og[center + 1]
