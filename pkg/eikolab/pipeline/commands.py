"""
Command runner orchestrating the diagnostics behind each CLI subcommand.
"""

import time
from typing import Any, Callable, Dict, List, Optional

from pydantic import ValidationError

from eikolab.core.config import RunConfig, apply_overrides, effective_settings, get_settings
from eikolab.core.errors import NumericalContractError, ValidationFailure
from eikolab.core.logging import get_logger
from eikolab.core.metrics import get_metrics_collector
from eikolab.reports.models import GenerateRecord, ProductionRecord, SeminormRecord, WindingRecord
from eikolab.reports.writer import build_envelope, config_hash, write_characteristics, write_ladder, write_report
from eikolab.tools.burgers import (
    EntropyPair,
    ShockParams,
    SpaceTimeField,
    SpaceTimeGrid,
    SpaceTimeWindow,
    classify_burgers,
    generate_burgers,
    read_spacetime,
    regularized_energy,
    shock_dissipation_oracle,
    shock_speed,
    weighted_shock_length,
)
from eikolab.tools.characteristics import (
    classify,
    ordering_check,
    sample_node_pairs,
    trace_bundle,
    window_seeds,
    winding_number,
)
from eikolab.tools.entropy import ElementaryEntropy, ExtendedEntropy, entropy_production, load_entropy, production_decomposition
from eikolab.tools.fields import GridField2, GridSpec, Window, circle_loop, generate, read_field, write_field
from eikolab.tools.kinetic import DirectionFan, reconstruction_error, residual_fan
from eikolab.tools.quadrature import TestBump
from eikolab.tools.regularity import cet_bound, gagliardo_seminorm

settings = get_settings()
logger = get_logger()

Handler = Callable[[RunConfig, str], int]

# Default space-time window: the domain shrunk by this fraction on every side
_BURGERS_WINDOW_INSET = 0.1


class CommandRunner:
    """Runs one configured command and maps failures to exit codes."""

    def __init__(self):
        self.logger = logger
        self.metrics = get_metrics_collector()
        self._handlers: Dict[str, Handler] = {
            "generate": self.cmd_generate,
            "seminorm": self.cmd_seminorm,
            "production": self.cmd_production,
            "kinetic": self.cmd_kinetic,
            "classify": self.cmd_classify,
            "burgers": self.cmd_burgers,
        }

    def run(self, config: RunConfig) -> int:
        """
        Execute ``config.command``.

        Returns:
            0 on success, 2 on validation failure, 3 on a numerical-contract violation
        """
        self.logger.new_run()
        start = time.perf_counter()
        try:
            apply_overrides(config.settings)
            digest = config_hash({"run": config.model_dump(mode="json"), "settings": effective_settings()})
            self.logger.step("🚀 Running command", command=config.command, config_hash=digest[:12])
            code = self._handlers[config.command](config, digest)
        except NumericalContractError as e:
            self.logger.error("❌ Numerical contract violated", command=config.command, error=str(e))
            code = e.exit_code
        except (ValidationFailure, ValidationError) as e:
            self.metrics.increment_error("validation")
            self.logger.error("❌ Invalid input", command=config.command, error=str(e))
            code = ValidationFailure.exit_code
        except FileNotFoundError as e:
            self.metrics.increment_error("validation")
            self.logger.error("❌ Referenced file does not exist", command=config.command, error=str(e))
            code = ValidationFailure.exit_code

        duration_ms = (time.perf_counter() - start) * 1000
        self.metrics.record_step_time(config.command, duration_ms)
        self.logger.timing(config.command, duration_ms, exit_code=code)
        self.logger.info("📊 Run metrics", **self.metrics.get_metrics())
        return code

    # ------------------------------------------------------------------
    # Input helpers
    # ------------------------------------------------------------------

    @staticmethod
    def _grid_spec(config: RunConfig) -> GridSpec:
        x0 = -0.5 * (config.nx - 1) * config.h if config.x0 is None else config.x0
        y0 = -0.5 * (config.ny - 1) * config.h if config.y0 is None else config.y0
        return GridSpec.checked(nx=config.nx, ny=config.ny, x0=x0, y0=y0, h=config.h)

    @staticmethod
    def _load_field(config: RunConfig) -> GridField2:
        if config.field is None:
            raise ValidationFailure(f"'{config.command}' needs an input field (--field)")
        u = read_field(config.field)
        logger.debug("Field loaded", path=config.field, nx=u.spec.nx, ny=u.spec.ny, h=u.spec.h)
        return u

    @staticmethod
    def _zeta(config: RunConfig) -> TestBump:
        if config.zeta is None:
            raise ValidationFailure(f"'{config.command}' needs a test bump (--zeta cx,cy,R)")
        cx, cy, radius = config.zeta
        return TestBump(center=(cx, cy), radius=radius)

    @staticmethod
    def _window(config: RunConfig, spec: GridSpec, required: bool = False, inset: float = 0.0) -> Window:
        """Explicit window, or the domain shrunk by ``inset`` on every side."""
        if config.window is None and config.annulus is None:
            if required:
                raise ValidationFailure(f"'{config.command}' needs --window or --annulus")
            return Window(
                x_min=spec.x0 + inset, x_max=spec.x_max - inset, y_min=spec.y0 + inset, y_max=spec.y_max - inset
            )
        if config.window is None:
            cx, cy, r_min, r_max = config.annulus
            return Window.annulus((cx, cy), r_min, r_max)
        x_min, x_max, y_min, y_max = config.window
        if config.annulus is None:
            return Window(x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max)
        cx, cy, r_min, r_max = config.annulus
        return Window(x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max, center=(cx, cy), r_min=r_min, r_max=r_max)

    @staticmethod
    def _ladder(config: RunConfig) -> List[float]:
        return list(config.eps_ladder) if config.eps_ladder else list(settings.eps_ladder)

    # ------------------------------------------------------------------
    # Commands
    # ------------------------------------------------------------------

    def cmd_generate(self, config: RunConfig, digest: str) -> int:
        """Sample a canonical field and write it in the EIKO1 format; the summary goes to stdout."""
        if config.kind is None:
            raise ValidationFailure("generate needs --kind")
        if config.output is None:
            raise ValidationFailure("generate needs an output path (-o)")
        u = generate(config.kind, config.params, self._grid_spec(config))
        write_field(u, config.output)
        record = GenerateRecord(
            generator=config.kind,
            params=config.params,
            nx=u.spec.nx,
            ny=u.spec.ny,
            x0=u.spec.x0,
            y0=u.spec.y0,
            h=u.spec.h,
            shifted=u.spec != self._grid_spec(config),
            unit=u.unit,
            unit_defect=u.unit_defect(),
            output=config.output,
        )
        write_report(build_envelope("generate", digest, [record]))
        self.logger.step("✅ Field generated", generator=config.kind, output=config.output)
        return 0

    def cmd_seminorm(self, config: RunConfig, digest: str) -> int:
        """W^{s,p} sum over the window, then the commutator ladder when --eps-ladder is given."""
        u = self._load_field(config)
        # the widest mollifier of the ladder must fit inside the domain
        inset = (max(config.eps_ladder, default=0.0) + settings.support_margin_cells) * u.spec.h
        window = self._window(config, u.spec, inset=inset)
        window_desc = window.model_dump()
        rep = gagliardo_seminorm(u, config.s, config.p, window, seed=config.seed)
        records: List[Any] = [
            SeminormRecord(
                s=rep.s, p=rep.p, window=window_desc, h=rep.h, value=rep.value,
                pairs_used=rep.pairs_used, stderr=rep.stderr,
            )
        ]
        for factor in config.eps_ladder:
            cet = cet_bound(u, factor * u.spec.h, window)
            records.append(
                SeminormRecord(
                    s=1.0 / 3.0, p=3.0, window=window_desc, h=cet.h, eps=cet.eps,
                    value=cet.value, tail=cet.tail,
                )
            )
        write_ladder(build_envelope("seminorm", digest, records), config.output)
        self.logger.step("✅ Seminorm ladder written", rungs=len(records), value=rep.value)
        return 0

    def cmd_production(self, config: RunConfig, digest: str) -> int:
        """Entropy production of the field and its I/II split along the eps ladder."""
        u = self._load_field(config)
        zeta = self._zeta(config)
        if config.entropy is None:
            raise ValidationFailure("production needs an entropy description (--entropy)")
        entropy = load_entropy(config.entropy)
        desc = entropy.describe()
        zeta_desc = zeta.model_dump()

        total = entropy_production(entropy, u, zeta)
        records: List[Any] = [ProductionRecord(entropy=desc, zeta=zeta_desc, h=u.spec.h, total=total)]
        if config.eps_ladder:
            if isinstance(entropy, ElementaryEntropy):
                raise ValidationFailure("the eps decomposition needs a smooth entropy, not an elementary one")
            extended = ExtendedEntropy(base=entropy)
            for factor in config.eps_ladder:
                rep = production_decomposition(extended, u, factor * u.spec.h, zeta)
                records.append(
                    ProductionRecord(
                        entropy=desc, zeta=zeta_desc, h=rep.h, eps=rep.eps, I=rep.I, II=rep.II, total=rep.total,
                    )
                )
        write_ladder(build_envelope("production", digest, records), config.output)
        self.logger.step("✅ Production report written", total=total, rungs=len(records) - 1)
        return 0

    def cmd_kinetic(self, config: RunConfig, digest: str) -> int:
        """Kinetic residual for every direction of the fan plus the averaging-formula error."""
        u = self._load_field(config)
        zeta = self._zeta(config)
        fan = DirectionFan(size=config.fan_size or settings.fan_size)
        records: List[Dict[str, Any]] = [
            {"kind": "kinetic", **rep.model_dump()} for rep in residual_fan(u, fan, zeta)
        ]
        recon = reconstruction_error(u, fan)
        records.append({"kind": "reconstruction", **recon.model_dump()})
        write_ladder(build_envelope("kinetic", digest, records), config.output)
        worst = max(abs(r["residual"]) for r in records[:-1])
        self.logger.step("✅ Kinetic report written", N=fan.size, max_residual=worst, max_error=recon.max_error)
        return 0

    def cmd_classify(self, config: RunConfig, digest: str) -> int:
        """Window verdict with ordering statistics, an optional winding loop and trace export."""
        u = self._load_field(config)
        if config.d is None:
            raise ValidationFailure("classify needs the window margin (--d)")
        window = self._window(config, u.spec, required=True)
        report = classify(u, window, config.d)

        seed = settings.pair_seed if config.seed is None else config.seed
        pairs = sample_node_pairs(u.spec, 20_000, seed=seed, mask=window.node_mask(u.spec))
        records: List[Dict[str, Any]] = [
            {"kind": "classification", **report.model_dump()},
            {"kind": "ordering", **ordering_check(u, pairs).model_dump()},
        ]
        if config.loop is not None:
            cx, cy, radius = config.loop
            degree = winding_number(u, circle_loop((cx, cy), radius, config.loop_samples))
            loop_desc = {"center": [cx, cy], "radius": radius, "samples": config.loop_samples}
            records.append({"kind": "winding", **WindingRecord(loop=loop_desc, degree=degree).model_dump()})
        if config.trace_csv is not None:
            seeds = window_seeds(u.spec, window)
            chars = trace_bundle(u, seeds) + trace_bundle(u, seeds, backward=True)
            rows = write_characteristics(chars, config.trace_csv)
            self.logger.debug("Characteristics exported", path=config.trace_csv, rows=rows)

        write_report(build_envelope("classify", digest, records), config.output)
        self.logger.step("✅ Window classified", verdict=report.verdict)
        return 0

    @staticmethod
    def _burgers_params(config: RunConfig) -> Dict[str, Any]:
        params = dict(config.params)
        for name in ("vl", "vr", "s_star"):
            value = getattr(config, name)
            if value is not None:
                params[name] = value
        return params

    def _burgers_field(self, config: RunConfig) -> SpaceTimeField:
        if config.field is not None:
            return read_spacetime(config.field)
        if config.kind is None:
            raise ValidationFailure("burgers needs --kind or a BURG1 --field")
        params = self._burgers_params(config)
        grid = SpaceTimeGrid.spanning(config.t_range, config.s_range, config.nt, config.ns)
        return generate_burgers(config.kind, params, grid)

    @staticmethod
    def _burgers_windows(config: RunConfig, v: SpaceTimeField) -> List[SpaceTimeWindow]:
        if config.windows:
            return [SpaceTimeWindow(t_min=a, t_max=b, s_min=c, s_max=d) for a, b, c, d in config.windows]
        g = v.grid
        dt = _BURGERS_WINDOW_INSET * (g.t_max - g.t0)
        ds = _BURGERS_WINDOW_INSET * (g.s_max - g.s0)
        return [SpaceTimeWindow(t_min=g.t0 + dt, t_max=g.t_max - dt, s_min=g.s0 + ds, s_max=g.s_max - ds)]

    def cmd_burgers(self, config: RunConfig, digest: str) -> int:
        """Residual classification of a space-time field, optionally with the energy oracle."""
        v = self._burgers_field(config)
        windows = self._burgers_windows(config, v)
        report = classify_burgers(v, windows, eps_ladder=config.eps_ladder or None)
        if report.shock_free:
            verdict = "shock-free"
        elif report.entropy_solution:
            verdict = "entropy"
        else:
            verdict = "non-entropic"
        records: List[Dict[str, Any]] = [{"kind": "classification", "verdict": verdict, **report.model_dump()}]

        if config.energy:
            bump = windows[0].plateau()
            record: Dict[str, Any] = {
                "kind": "energy",
                "window": windows[0].model_dump(),
                "residual": report.windows[0].energy,
                "oracle": None,
                "weighted_shock_length": None,
            }
            if v.generator in ("shock", "nonentropic-shock") and config.field is None:
                shock = ShockParams(**self._burgers_params(config))
                length = weighted_shock_length(bump, shock.s_star, shock_speed(shock.vl, shock.vr))
                record["weighted_shock_length"] = length
                record["oracle"] = shock_dissipation_oracle(shock.vl, shock.vr, EntropyPair.energy()) * length
            record["regularized"] = [
                regularized_energy(v, factor * v.grid.ds, bump).model_dump() for factor in self._ladder(config)
            ]
            records.append(record)

        write_report(build_envelope("burgers", digest, records), config.output)
        self.logger.step("✅ Burgers report written", verdict=verdict, generator=v.generator)
        return 0


_runner: Optional[CommandRunner] = None


def get_command_runner() -> CommandRunner:
    global _runner
    if _runner is None:
        _runner = CommandRunner()
    return _runner

