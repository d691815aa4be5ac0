"""Scenario-driven command line: simulate, analyze, verify.

Scenario files are flat INI-style text with sections [plant], [gains],
[dither] and [sim]; see the bundled ``scenarios/example1.scenario`` for the
full key set.  Exit codes: 0 success, 1 validation failure, 2 runtime
divergence, 3 property failure.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence, TextIO

import numpy as np

from . import analysis
from .dynamics import (
    AlgorithmConfig,
    Variant,
    make_average_rhs,
    make_rhs,
    reduced_rhs,
)
from .errors import ComputationError, NonFiniteState, ParseError, ValidationError
from .integrate import (
    IntegrationSettings,
    Trajectory,
    average_channels,
    check_resolves_dither,
    default_dt,
    exact_initial_state,
    full_state_channels,
    integrate,
    numeric_average,
    reduced_channels,
    warmup,
)
from .problem import (
    LinearBarrier,
    PlantModel,
    QuadraticObjective,
    constrained_minimum,
    nb_eigenvector_condition,
    validate_plant,
)
from .sampling import random_full_state, random_plant, random_config
from .signals import DitherConfig

_VARIANT_NAMES = {
    "asfes": Variant.ASFES,
    "newton": Variant.NEWTON_ASFES,
    "classical": Variant.CLASSICAL_ES,
}

_KNOWN_KEYS = {
    "plant": {"hessian_row", "theta_star", "j_star", "h0", "h1"},
    "gains": {"k", "c", "delta", "omega_f"},
    "dither": {"amplitude", "base_scale", "ratios"},
    "sim": {
        "theta0", "t_end", "dt", "record_stride", "gamma_guard",
        "warmup_rel_tol", "variants", "include_reduced", "include_average",
    },
}
_REPEATABLE = {"hessian_row", "theta0"}


@dataclass(frozen=True)
class Scenario:
    """Everything one invocation needs: plant, gains, starts, horizons.

    ``c_values`` and ``initial_thetas`` may hold several entries; the runner
    loops over their product.  ``config`` carries the first c value.
    """

    plant: PlantModel
    config: AlgorithmConfig
    c_values: tuple
    initial_thetas: tuple
    settings: IntegrationSettings
    warmup_rel_tol: float
    variants_to_run: tuple
    include_reduced: bool
    include_average: bool

    @property
    def initial_theta(self) -> np.ndarray:
        return self.initial_thetas[0]

    def config_for(self, c: float, variant: Variant) -> AlgorithmConfig:
        return AlgorithmConfig(
            k=self.config.k, c=c, delta=self.config.delta,
            omega_f=self.config.omega_f, dither=self.config.dither,
            variant=variant,
        )


def _parse_floats(text: str, line: int) -> list:
    try:
        return [float(tok) for tok in text.split(",")]
    except ValueError as exc:
        raise ParseError(line, f"expected comma-separated numbers, got {text!r}") from exc


def _parse_bool(text: str, line: int) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ParseError(line, f"expected true/false, got {text!r}")


def parse_scenario(path) -> Scenario:
    """Parse and validate a scenario file (unknown keys are rejected)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ParseError(None, f"cannot read {path}: {exc}") from exc
    sections: dict = {name: {} for name in _KNOWN_KEYS}
    section = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip().lower()
            if name not in _KNOWN_KEYS:
                raise ParseError(lineno, f"unknown section [{name}]")
            section = name
            continue
        if "=" not in line:
            raise ParseError(lineno, f"expected key = value, got {raw.strip()!r}")
        if section is None:
            raise ParseError(lineno, "key outside of any section")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS[section]:
            raise ParseError(lineno, f"unknown key {key!r} in section [{section}]")
        if key in _REPEATABLE:
            sections[section].setdefault(key, []).append((lineno, value))
        elif key in sections[section]:
            raise ParseError(lineno, f"duplicate key {key!r} in section [{section}]")
        else:
            sections[section][key] = (lineno, value)
        continue

    def require(section_name: str, key: str):
        try:
            return sections[section_name][key]
        except KeyError:
            raise ParseError(None, f"missing key {key!r} in section [{section_name}]")

    # plant
    rows = [_parse_floats(v, ln) for ln, v in require("plant", "hessian_row")]
    hessian = np.array(rows)
    ln, v = require("plant", "theta_star")
    theta_star = np.array(_parse_floats(v, ln))
    ln, v = require("plant", "j_star")
    j_star = _parse_floats(v, ln)[0]
    ln, v = require("plant", "h0")
    h0 = _parse_floats(v, ln)[0]
    ln, v = require("plant", "h1")
    h1 = np.array(_parse_floats(v, ln))
    plant = validate_plant(
        QuadraticObjective(j_star=j_star, hessian=hessian, theta_star=theta_star),
        LinearBarrier(h0=h0, h1=h1),
    )

    # dither
    ln, v = require("dither", "amplitude")
    amplitude = _parse_floats(v, ln)[0]
    ln, v = require("dither", "base_scale")
    base_scale = _parse_floats(v, ln)[0]
    ln, v = require("dither", "ratios")
    try:
        ratios = tuple(Fraction(tok.strip()) for tok in v.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(ln, f"expected comma-separated rationals, got {v!r}") from exc
    dither = DitherConfig(amplitude=amplitude, ratios=ratios, base_scale=base_scale)
    if dither.dimension != plant.dimension:
        raise ParseError(ln, f"{dither.dimension} dither frequencies for a "
                             f"{plant.dimension}-parameter plant")

    # gains
    ln, v = require("gains", "k")
    k = _parse_floats(v, ln)[0]
    ln, v = require("gains", "c")
    c_values = tuple(_parse_floats(v, ln))
    ln, v = require("gains", "delta")
    delta = _parse_floats(v, ln)[0]
    ln, v = require("gains", "omega_f")
    omega_f = _parse_floats(v, ln)[0]
    config = AlgorithmConfig(k=k, c=c_values[0], delta=delta, omega_f=omega_f,
                             dither=dither, variant=Variant.ASFES)

    # sim
    thetas = []
    for ln, v in require("sim", "theta0"):
        th = np.array(_parse_floats(v, ln))
        if th.shape != (plant.dimension,):
            raise ParseError(ln, f"theta0 has {th.shape[0]} components, expected {plant.dimension}")
        thetas.append(th)
    ln, v = require("sim", "t_end")
    t_end = _parse_floats(v, ln)[0]
    if "dt" in sections["sim"]:
        ln, v = sections["sim"]["dt"]
        dt = default_dt(dither) if v.strip().lower() == "auto" else _parse_floats(v, ln)[0]
    else:
        dt = default_dt(dither)
    stride = 1
    if "record_stride" in sections["sim"]:
        ln, v = sections["sim"]["record_stride"]
        stride = int(_parse_floats(v, ln)[0])
    guard = 1e6
    if "gamma_guard" in sections["sim"]:
        ln, v = sections["sim"]["gamma_guard"]
        guard = _parse_floats(v, ln)[0]
    rel_tol = 1e-4
    if "warmup_rel_tol" in sections["sim"]:
        ln, v = sections["sim"]["warmup_rel_tol"]
        rel_tol = _parse_floats(v, ln)[0]
    variants = (Variant.ASFES,)
    if "variants" in sections["sim"]:
        ln, v = sections["sim"]["variants"]
        names = [tok.strip().lower() for tok in v.split(",") if tok.strip()]
        unknown = [nm for nm in names if nm not in _VARIANT_NAMES]
        if unknown:
            raise ParseError(ln, f"unknown variant {unknown[0]!r}")
        variants = tuple(_VARIANT_NAMES[nm] for nm in names)
    include_reduced = False
    if "include_reduced" in sections["sim"]:
        ln, v = sections["sim"]["include_reduced"]
        include_reduced = _parse_bool(v, ln)
    include_average = False
    if "include_average" in sections["sim"]:
        ln, v = sections["sim"]["include_average"]
        include_average = _parse_bool(v, ln)

    settings = IntegrationSettings(dt=dt, t_end=t_end, record_stride=stride,
                                   gamma_guard=guard)
    check_resolves_dither(settings, dither)
    # per-variant configs are validated here so a bad combination fails fast
    for c in c_values:
        for variant in variants:
            AlgorithmConfig(k=k, c=c, delta=delta, omega_f=omega_f,
                            dither=dither, variant=variant)
    return Scenario(
        plant=plant, config=config, c_values=c_values,
        initial_thetas=tuple(thetas), settings=settings,
        warmup_rel_tol=rel_tol, variants_to_run=variants,
        include_reduced=include_reduced, include_average=include_average,
    )


def _fmt(x: float) -> str:
    return f"{x:.17g}"


def warmup_settings(settings: IntegrationSettings, omega_f: float) -> IntegrationSettings:
    """Horizon for settling the filters, independent of the run horizon:
    sixty filter time constants reach far below the default tolerance."""
    return IntegrationSettings(
        dt=settings.dt, t_end=max(settings.t_end, 60.0 / omega_f),
        record_stride=settings.record_stride, gamma_guard=settings.gamma_guard,
    )


def _slow_settings(scenario: Scenario) -> IntegrationSettings:
    """Step for the dither-free hierarchies (averaged and reduced models):
    no fast oscillation to resolve, so 25x the base step, capped by the
    filter time constant."""
    dt = min(25.0 * scenario.settings.dt, 0.25 / scenario.config.omega_f)
    return IntegrationSettings(
        dt=dt, t_end=scenario.settings.t_end,
        record_stride=1, gamma_guard=scenario.settings.gamma_guard,
    )


def write_trajectory_csv(
    path: Path,
    traj: Trajectory,
    theta_hat_label: str,
    n: int,
    c: float,
    extra_state_names: Sequence[str] = (),
) -> None:
    """One row per record: time, plant input theta, raw states, J, h, and
    the assigned-rate envelope h(0)exp(-c t).  17 significant digits so
    re-parsing reproduces every float exactly."""
    cols = ["t"]
    cols += [f"theta_{i + 1}" for i in range(n)]
    state_cols = [f"{theta_hat_label}_{i + 1}" for i in range(n)]
    state_cols += list(extra_state_names)
    cols += state_cols
    cols += ["j", "h", "envelope"]
    h0 = traj.h_values[0]
    with path.open("w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for i, t in enumerate(traj.times):
            row = [_fmt(t)]
            row += [_fmt(x) for x in traj.thetas[i]]
            row += [_fmt(x) for x in traj.states[i][: len(state_cols)]]
            row += [_fmt(traj.j_values[i]), _fmt(traj.h_values[i]),
                    _fmt(h0 * math.exp(-c * t))]
            fh.write(",".join(row) + "\n")


def _filter_state_names(n: int, newton: bool) -> list:
    names = [f"g_j_{i + 1}" for i in range(n)] + ["eta_j"]
    names += [f"g_h_{i + 1}" for i in range(n)] + ["eta_h", "gamma"]
    if newton:
        names.append("gamma_newton")
    return names


def run_simulate(scenario: Scenario, output_dir) -> int:
    """Warm up and integrate every requested variant (plus the averaged and
    reduced hierarchies when asked), writing one CSV per run and a summary.

    Returns 0 on success, 2 if any run diverged (its CSV then holds the
    trajectory up to the failure).
    """
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    plant = scenario.plant
    n = plant.dimension
    optimum = constrained_minimum(plant)
    exit_code = 0
    summary_lines = []

    for c in scenario.c_values:
        for xi, theta0 in enumerate(scenario.initial_thetas):
            runs: list = []
            for variant in scenario.variants_to_run:
                runs.append((variant.value, variant))
            for label, variant in runs:
                cfg = scenario.config_for(c, variant)
                name = f"{label}_c{c:g}_x{xi}"
                notes = []
                try:
                    state0 = warmup(plant, cfg, theta0,
                                    warmup_settings(scenario.settings, cfg.omega_f),
                                    scenario.warmup_rel_tol)
                except ComputationError as exc:
                    notes.append(f"warmup failed ({exc}); "
                                 "falling back to exact filter initialization")
                    state0 = exact_initial_state(plant, cfg, theta0)
                rhs = make_rhs(plant, cfg)
                traj = None
                try:
                    traj = integrate(
                        rhs, state0.as_vector(), scenario.settings,
                        channels=full_state_channels(plant, cfg),
                        gamma_index=3 * n + 2,
                    )
                except NonFiniteState as exc:
                    notes.append(f"DIVERGED: {exc}")
                    traj = exc.partial
                    exit_code = 2
                if traj is not None and len(traj) > 0:
                    write_trajectory_csv(
                        out / f"{name}.csv", traj, "theta_hat", n, c,
                        _filter_state_names(n, variant is Variant.NEWTON_ASFES),
                    )
                    report = analysis.safety_report(traj, plant, c, optimum)
                    summary_lines += _summary_block(name, report, traj, notes)
                else:
                    summary_lines += [f"[{name}]"] + [f"  note: {s}" for s in notes] + [""]

            slow = _slow_settings(scenario)
            if scenario.include_average:
                cfg = scenario.config_for(c, Variant.ASFES)
                x0 = exact_initial_state(plant, cfg, theta0).as_vector()
                x0[:n] = theta0 - plant.theta_star
                name = f"average_c{c:g}_x{xi}"
                f = make_average_rhs(plant, cfg)
                traj = integrate(lambda t, y: f(y), x0, slow,
                                 channels=average_channels(plant),
                                 gamma_index=3 * n + 2)
                write_trajectory_csv(out / f"{name}.csv", traj, "theta_tilde", n, c,
                                     _filter_state_names(n, False))
                report = analysis.safety_report(traj, plant, c, optimum)
                summary_lines += _summary_block(name, report, traj, [])
            if scenario.include_reduced:
                cfg = scenario.config_for(c, Variant.ASFES)
                name = f"reduced_c{c:g}_x{xi}"
                traj = integrate(
                    lambda t, y: reduced_rhs(plant, cfg, y),
                    theta0 - plant.theta_star, slow,
                    channels=reduced_channels(plant),
                )
                write_trajectory_csv(out / f"{name}.csv", traj, "theta_tilde", n, c)
                report = analysis.safety_report(traj, plant, c, optimum)
                summary_lines += _summary_block(name, report, traj, [])

    (out / "summary.txt").write_text("\n".join(summary_lines) + "\n")
    return exit_code


def _summary_block(name: str, report, traj: Trajectory, notes: list) -> list:
    lines = [f"[{name}]"]
    lines.append(f"  worst_violation = {report.worst_violation:.6g}")
    lines.append(f"  violation_time = {report.violation_time:.6g}")
    lines.append(f"  final_h = {report.final_h:.6g}")
    if report.entered_safe_set_at is not None:
        lines.append(f"  entered_safe_set_at = {report.entered_safe_set_at:.6g}")
    lines.append(f"  final_objective_gap = {report.final_objective_gap:.6g}")
    if traj.gamma_exceeded_at is not None:
        lines.append(f"  gamma_guard_exceeded_at = {traj.gamma_exceeded_at:.6g}")
    for s in notes:
        lines.append(f"  note: {s}")
    lines.append("")
    return lines


def run_analyze(scenario: Scenario, output_dir) -> int:
    """Write equilibrium, constrained-optimum, spectral and Jacobian-check
    results to a readable report plus a machine-readable CSV."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    plant = scenario.plant
    n = plant.dimension
    lines = []
    rows = []  # (section, key, value)

    def emit(section: str, key: str, value) -> None:
        if isinstance(value, float):
            lines.append(f"  {key} = {value:.12g}")
            rows.append((section, key, _fmt(value)))
        elif isinstance(value, np.ndarray):
            lines.append(f"  {key} = [{', '.join(f'{v:.12g}' for v in value)}]")
            for i, v in enumerate(value):
                rows.append((section, f"{key}_{i + 1}", _fmt(float(v))))
        else:
            lines.append(f"  {key} = {value}")
            rows.append((section, key, str(value)))

    optimum = constrained_minimum(plant)
    lines.append("[constrained_optimum]")
    emit("constrained_optimum", "theta_smin", optimum.theta_smin)
    emit("constrained_optimum", "j_s_star", float(optimum.j_s_star))
    emit("constrained_optimum", "active", optimum.active)
    emit("constrained_optimum", "nb_eigenvector_condition",
         nb_eigenvector_condition(plant, 1e-9))
    lines.append("")

    for c in scenario.c_values:
        cfg = scenario.config_for(c, Variant.ASFES)
        sec = f"c={c:g}"
        lines.append(f"[equilibrium {sec}]")
        eq = analysis.average_equilibrium(plant, cfg)
        emit(sec, "theta_tilde_ae", eq.theta_tilde_ae)
        emit(sec, "theta_ae", eq.theta_tilde_ae + plant.theta_star)
        emit(sec, "g_j_ae", eq.g_j_ae)
        emit(sec, "eta_j_ae", eq.eta_j_ae)
        emit(sec, "g_h_ae", eq.g_h_ae)
        emit(sec, "eta_h_ae", eq.eta_h_ae)
        emit(sec, "gamma_ae", eq.gamma_ae)
        emit(sec, "d", eq.d)
        emit(sec, "c1", eq.c1)
        emit(sec, "alpha", analysis.equilibrium_alpha(plant, cfg, eq))
        residual = float(np.linalg.norm(
            make_average_rhs(plant, cfg)(eq.as_vector())))
        emit(sec, "residual_norm", residual)

        report = analysis.spectral_check(plant, cfg, eq)
        emit(sec, "hurwitz", report.hurwitz)
        emit(sec, "omega_f_eigen_found", report.omega_f_eigen_found)
        emit(sec, "max_pairing_residual",
             max(report.pairing_residuals) if report.pairing_residuals else 0.0)
        emit(sec, "j11_eigenvalues_real", report.j11_eigenvalues.real)
        emit(sec, "j11_eigenvalues_imag", report.j11_eigenvalues.imag)
        emit(sec, "z_eigenvalues_real", report.z_eigenvalues.real)
        emit(sec, "reduced_eigenvalues_real", report.reduced_eigenvalues.real)

        j11 = analysis.jacobian_j11(plant, cfg, eq)
        g = analysis.average_error_rhs(plant, cfg, eq)
        fd = analysis.finite_diff_jacobian(g, np.zeros(3 * n + 3), 1e-6)
        lead = fd[: 2 * n + 1, : 2 * n + 1]
        emit(sec, "j11_fd_rel_error",
             float(np.max(np.abs(lead - j11)) / max(1.0, np.max(np.abs(j11)))))
        j_r = analysis.reduced_jacobian(plant, cfg, eq)
        fd_r = analysis.finite_diff_jacobian(
            lambda x: reduced_rhs(plant, cfg, x + eq.theta_tilde_ae),
            np.zeros(n), 1e-6)
        emit(sec, "jr_fd_rel_error",
             float(np.max(np.abs(fd_r - j_r)) / max(1.0, np.max(np.abs(j_r)))))
        lines.append("")

    lines.append("[delta_sweep]")
    cfg0 = scenario.config_for(scenario.c_values[0], Variant.ASFES)
    for dl in (1e-6, 1e-4, 1e-2):
        cfg_d = AlgorithmConfig(k=cfg0.k, c=cfg0.c, delta=dl,
                                omega_f=cfg0.omega_f, dither=cfg0.dither)
        eq_d = analysis.average_equilibrium(plant, cfg_d)
        emit("delta_sweep", f"eta_h_ae_delta_{dl:g}", eq_d.eta_h_ae)
    lines.append("")

    (out / "analysis.txt").write_text("\n".join(lines) + "\n")
    with (out / "analysis.csv").open("w", newline="") as fh:
        fh.write("section,key,value\n")
        for section, key, value in rows:
            fh.write(f"{section},{key},{value}\n")
    return 0


def run_verify(seed: int, trials: int, stream: Optional[TextIO] = None) -> int:
    """Run the seeded randomized invariant suites and print one line per
    property.  Returns 0 when every property holds, 3 otherwise."""
    stream = stream or sys.stdout
    if trials <= 0:
        print("verify: --trials must be a positive integer", file=stream)
        return 1

    failures = 0

    def report(name: str, ok: bool, detail: str) -> None:
        nonlocal failures
        status = "PASS" if ok else "FAIL"
        print(f"{status}  {name:<24} {detail}", file=stream)
        if not ok:
            failures += 1

    # averaging oracle: quadrature average of the dithered field against the
    # analytic averaged field, on the two-parameter example configuration
    rng = np.random.default_rng(seed)
    plant2 = validate_plant(
        QuadraticObjective(j_star=0.0, hessian=np.diag([2.0, 2.0]),
                           theta_star=np.zeros(2)),
        LinearBarrier(h0=-1.0, h1=np.array([1.0, 1.0])),
    )
    cfg2 = AlgorithmConfig(k=0.1, c=1.0, delta=1e-3, omega_f=3.0,
                           dither=DitherConfig(0.25, (75, 100), 1.0))
    from .dynamics import average_rhs as _avg_rhs
    worst = 0.0
    for _ in range(trials):
        x = random_full_state(rng, 2)
        ana = _avg_rhs(plant2, cfg2, x)
        num = numeric_average(plant2, cfg2, x)
        rel = float(np.max(np.abs(num - ana) / np.maximum(1.0, np.abs(ana))))
        worst = max(worst, rel)
    report("averaging-oracle", worst <= 1e-8,
           f"trials={trials} max_rel_err={worst:.3e}")

    # closed-form equilibrium: residual, safe interior, gamma root
    rng = np.random.default_rng(seed + 1)
    worst_res, worst_gam, min_eta = 0.0, 0.0, math.inf
    for i in range(trials):
        nn = (i % 5) + 1
        plant = random_plant(rng, nn)
        cfg = random_config(rng, nn)
        eq = analysis.average_equilibrium(plant, cfg)
        res = float(np.linalg.norm(make_average_rhs(plant, cfg)(eq.as_vector())))
        worst_res = max(worst_res, res)
        min_eta = min(min_eta, eq.eta_h_ae)
        worst_gam = max(worst_gam, abs(eq.gamma_ae - 1.0 / float(plant.h1 @ plant.h1)))
    report("equilibrium-residual", worst_res <= 1e-10,
           f"trials={trials} max_residual={worst_res:.3e}")
    report("equilibrium-interior", min_eta > 0.0,
           f"trials={trials} min_eta_h={min_eta:.3e}")
    report("gamma-riccati-root", worst_gam <= 1e-12,
           f"trials={trials} max_error={worst_gam:.3e}")

    # spectral structure of the linearization
    rng = np.random.default_rng(seed + 2)
    dims = (1, 2, 3, 5)
    worst_pair = 0.0
    ok = True
    detail = ""
    for i in range(trials):
        nn = dims[i % len(dims)]
        plant = random_plant(rng, nn)
        cfg = random_config(rng, nn)
        try:
            eq = analysis.average_equilibrium(plant, cfg)
            rep = analysis.spectral_check(plant, cfg, eq)
            if rep.pairing_residuals:
                worst_pair = max(worst_pair, max(rep.pairing_residuals))
        except ComputationError as exc:
            ok = False
            detail = str(exc)
            break
    report("spectral-structure", ok,
           detail if not ok else f"trials={trials} max_pairing_residual={worst_pair:.3e}")

    # exact safety of the reduced model
    rng = np.random.default_rng(seed + 3)
    n_red = max(5, trials // 10)
    worst_gap = math.inf
    for i in range(n_red):
        nn = (i % 3) + 1
        plant = random_plant(rng, nn, h0_sign=-1)
        cfg = random_config(rng, nn)
        settings = IntegrationSettings(dt=0.005, t_end=8.0, record_stride=1)
        for start_scale in (1.0, -1.0):
            x0 = plant.h1 / float(np.linalg.norm(plant.h1)) * start_scale * 2.0
            traj = integrate(lambda t, y: reduced_rhs(plant, cfg, y), x0,
                             settings, channels=reduced_channels(plant))
            gap = traj.h_values - traj.h_values[0] * np.exp(-cfg.c * traj.times)
            worst_gap = min(worst_gap, float(np.min(gap)))
    report("reduced-exact-safety", worst_gap >= -1e-6,
           f"trials={n_red} min_envelope_gap={worst_gap:.3e}")

    if failures == 0:
        print(f"ALL PROPERTIES PASS (seed={seed}, trials={trials})", file=stream)
        return 0
    print(f"{failures} PROPERTY FAILURES (seed={seed}, trials={trials})", file=stream)
    return 3


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="asfes",
        description="Safe extremum seeking: simulate scenarios, analyze "
                    "equilibria and spectra, verify numeric invariants.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="integrate all requested variants")
    p_sim.add_argument("scenario", help="path to a .scenario file")
    p_sim.add_argument("--out", required=True, help="output directory")

    p_ana = sub.add_parser("analyze", help="equilibrium, spectra, Jacobian checks")
    p_ana.add_argument("scenario", help="path to a .scenario file")
    p_ana.add_argument("--out", required=True, help="output directory")

    p_ver = sub.add_parser("verify", help="seeded randomized invariant suites")
    p_ver.add_argument("--seed", type=int, default=0)
    p_ver.add_argument("--trials", type=int, default=100)

    args = parser.parse_args(argv)
    try:
        if args.command == "simulate":
            return run_simulate(parse_scenario(args.scenario), args.out)
        if args.command == "analyze":
            return run_analyze(parse_scenario(args.scenario), args.out)
        return run_verify(args.seed, args.trials)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ComputationError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
