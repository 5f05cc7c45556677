"""Experiment configuration: dataclasses and the INI preset format.

A config file is read by :mod:`configparser`. Sections and keys::

    [experiment]   method, seed, cs_fraction, noise_sigma | snr_db, workers, out
    [scene]        nx, ny, extent, type = points | extended, and either
                   points = "x y re im; x y re im; ..."  (metres, amplitude)
                   or shape, amplitude_law, box = "xmin ymin xmax ymax",
                   thickness, amplitude; optional anisotropy = min_gain
    [aperture]     L, K, M, theta_start, theta_end, center_freq, bandwidth,
                   elevation, c_light
    [graph.en]     sigma, cutoff (metres) or sigma_cells, cutoff_cells
    [graph.nltv]   sigma, cutoff (patch-distance units), patch, window,
                   magnitude_only
    [solver]       lambda_e, lambda_f, c_u, c_z, tol, max_iter, scheme
    [solver.<method>]  per-method overrides of any [solver] key

Penalties have no defaults. In the pipeline both the data and operator
are divided by sqrt(rows), so penalties are on a per-measurement scale.
"""

import configparser
import io
from dataclasses import dataclass, field, replace
from importlib import resources

from .forward import ApertureSpec, C_LIGHT
from .graph import KernelParams
from .solver import GflParams

METHODS = ("bp", "tv2d", "gfl-nltv", "gfl-entv")
SOLVER_METHODS = ("tv2d", "gfl-nltv", "gfl-entv")


@dataclass(frozen=True)
class SceneConfig:
    nx: int
    ny: int
    extent: float
    type: str = "points"
    points: tuple = ()
    shape: str = "rectangle"
    amplitude_law: str = "constant"
    box: tuple = None
    thickness: float = None
    amplitude: float = 1.0
    anisotropy: float = None


@dataclass(frozen=True)
class ExperimentConfig:
    scene: SceneConfig
    aperture: ApertureSpec
    method: str = "gfl-entv"
    en: KernelParams = None
    nltv: KernelParams = None
    solver: dict = field(default_factory=dict)  # method -> GflParams
    cs_fraction: float = 1.0
    noise_sigma: float = 0.0
    snr_db: float = None
    seed: int = 0
    workers: int = 1
    out: str = "out"

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not 0 < self.cs_fraction <= 1:
            raise ValueError(f"cs_fraction must lie in (0, 1], got {self.cs_fraction}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def solver_params(self, method=None):
        method = method or self.method
        if method not in self.solver:
            raise ValueError(f"method {method!r} needs lambda_e and lambda_f in [solver]")
        return self.solver[method]

    def validate(self):
        """Check that the fields the chosen method needs are present."""
        if self.method in SOLVER_METHODS:
            self.solver_params()
        if self.method == "gfl-entv" and self.en is None:
            raise ValueError("gfl-entv needs a [graph.en] section with a cutoff")
        if self.method == "gfl-nltv" and self.nltv is None:
            raise ValueError("gfl-nltv needs a [graph.nltv] section with patch and window")
        return self

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _floats(text):
    return tuple(float(v) for v in text.split())


def _parse_points(text):
    pts = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats(chunk)
        if len(vals) == 3:
            x, y, re, im = *vals, 0.0
        elif len(vals) == 4:
            x, y, re, im = vals
        else:
            raise ValueError(f"point entry {chunk.strip()!r} needs 'x y re [im]'")
        pts.append((x, y, complex(re, im)))
    return tuple(pts)


def _kernel(sec, spacing, extra=False):
    if sec is None:
        return None

    def metric(key):
        if key in sec:
            return sec.getfloat(key)
        if f"{key}_cells" in sec:
            return sec.getfloat(f"{key}_cells") * spacing
        raise ValueError(f"[{sec.name}] needs {key} or {key}_cells")

    if not extra:
        return KernelParams(sigma=metric("sigma"), cutoff=metric("cutoff"))
    return KernelParams(
        sigma=sec.getfloat("sigma"),
        cutoff=sec.getfloat("cutoff", fallback=float("inf")),
        patch=sec.getint("patch", fallback=3),
        window=sec.getint("window", fallback=21),
        magnitude_only=sec.getboolean("magnitude_only", fallback=False),
    )


_SOLVER_CASTS = {
    "lambda_e": float, "lambda_f": float, "c_u": float, "c_z": float,
    "tol": float, "max_iter": int, "scheme": str,
}


def _solver_params(cp):
    base = dict(cp["solver"]) if cp.has_section("solver") else {}
    unknown = set(base) - set(_SOLVER_CASTS)
    if unknown:
        raise ValueError(f"unknown [solver] keys: {sorted(unknown)}")
    out = {}
    for method in SOLVER_METHODS:
        merged = dict(base)
        name = f"solver.{method}"
        if cp.has_section(name):
            merged.update(cp[name])
        if "lambda_e" in merged and "lambda_f" in merged:
            out[method] = GflParams(**{k: _SOLVER_CASTS[k](v) for k, v in merged.items()})
    return out


def parse_config(text):
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read_string(text)
    for name in ("scene", "aperture"):
        if not cp.has_section(name):
            raise ValueError(f"config is missing the [{name}] section")
    sc = cp["scene"]
    box = sc.get("box")
    scene = SceneConfig(
        nx=sc.getint("nx"),
        ny=sc.getint("ny"),
        extent=sc.getfloat("extent"),
        type=sc.get("type", "points"),
        points=_parse_points(sc.get("points", "")),
        shape=sc.get("shape", "rectangle"),
        amplitude_law=sc.get("amplitude_law", "constant"),
        box=_floats(box) if box else None,
        thickness=sc.getfloat("thickness", fallback=None),
        amplitude=sc.getfloat("amplitude", fallback=1.0),
        anisotropy=sc.getfloat("anisotropy", fallback=None),
    )
    ap = cp["aperture"]
    aperture = ApertureSpec(
        L=ap.getint("L"), K=ap.getint("K"), M=ap.getint("M"),
        theta_start=ap.getfloat("theta_start"), theta_end=ap.getfloat("theta_end"),
        center_freq=ap.getfloat("center_freq"), bandwidth=ap.getfloat("bandwidth"),
        elevation=ap.getfloat("elevation", fallback=30.0),
        c_light=ap.getfloat("c_light", fallback=C_LIGHT),
    )
    spacing = 2.0 * scene.extent / scene.nx
    ex = cp["experiment"] if cp.has_section("experiment") else {}
    get = ex.get if ex else (lambda k, d=None: d)
    snr = get("snr_db", None)
    return ExperimentConfig(
        scene=scene,
        aperture=aperture,
        method=get("method", "gfl-entv"),
        en=_kernel(cp["graph.en"] if cp.has_section("graph.en") else None, spacing),
        nltv=_kernel(cp["graph.nltv"] if cp.has_section("graph.nltv") else None, spacing, extra=True),
        solver=_solver_params(cp),
        cs_fraction=float(get("cs_fraction", 1.0)),
        noise_sigma=float(get("noise_sigma", 0.0)),
        snr_db=float(snr) if snr is not None else None,
        seed=int(get("seed", 0)),
        workers=int(get("workers", 1)),
        out=get("out", "out"),
    )


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())


def load_preset(name):
    """Load a bundled preset, e.g. ``"desk"`` or ``"fullscale"``."""
    text = resources.files("gflsar.presets").joinpath(f"{name}.ini").read_text()
    return parse_config(text)


def format_config(cfg):
    """Render a config back to the INI format (used for ``config.echo``)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    sc = cfg.scene
    cp["experiment"] = {
        "method": cfg.method, "seed": cfg.seed, "cs_fraction": repr(cfg.cs_fraction),
        "noise_sigma": repr(cfg.noise_sigma), "workers": cfg.workers, "out": cfg.out,
    }
    if cfg.snr_db is not None:
        cp["experiment"]["snr_db"] = repr(cfg.snr_db)
    scene = {"nx": sc.nx, "ny": sc.ny, "extent": repr(sc.extent), "type": sc.type}
    if sc.type == "points":
        scene["points"] = "; ".join(
            f"{x!r} {y!r} {a.real!r} {a.imag!r}" for x, y, a in sc.points)
    else:
        scene.update(shape=sc.shape, amplitude_law=sc.amplitude_law, amplitude=repr(sc.amplitude))
        if sc.box is not None:
            scene["box"] = " ".join(repr(v) for v in sc.box)
        if sc.thickness is not None:
            scene["thickness"] = repr(sc.thickness)
    if sc.anisotropy is not None:
        scene["anisotropy"] = repr(sc.anisotropy)
    cp["scene"] = scene
    a = cfg.aperture
    cp["aperture"] = {k: repr(getattr(a, k)) for k in (
        "L", "K", "M", "theta_start", "theta_end", "center_freq", "bandwidth", "elevation", "c_light")}
    if cfg.en is not None:
        cp["graph.en"] = {"sigma": repr(cfg.en.sigma), "cutoff": repr(cfg.en.cutoff)}
    if cfg.nltv is not None:
        n = cfg.nltv
        cp["graph.nltv"] = {"sigma": repr(n.sigma), "cutoff": repr(n.cutoff), "patch": n.patch,
                            "window": n.window, "magnitude_only": str(n.magnitude_only).lower()}
    for method, p in sorted(cfg.solver.items()):
        cp[f"solver.{method}"] = {k: repr(getattr(p, k)) if k != "scheme" else p.scheme
                                  for k in _SOLVER_CASTS}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
