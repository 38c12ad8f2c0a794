"""``key = value`` run configuration with driver-dependent defaults."""

from __future__ import annotations

from dataclasses import dataclass

from .compress import default_delta


class ConfigError(ValueError):
    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


KEYS = [
    "driver", "domain.kind", "domain.size", "domain.origin", "domain.holes", "level",
    "basis.vanishing_moments", "kernel.name", "kernel.s", "kernel.length", "kernel.order",
    "compression.a", "compression.delta", "ordering.method", "ordering.leaf_size",
    "heat.theta", "heat.T", "heat.steps", "heat.snapshot_every", "sample.count", "seed",
    "output.dir", "output.timings", "threads",
]

_COMMON = {
    "level": "4", "compression.a": "1.25", "compression.delta": "auto",
    "ordering.method": "nested_dissection", "ordering.leaf_size": "32",
    "heat.theta": "0.5", "heat.T": "3", "heat.steps": "150", "heat.snapshot_every": "15",
    "sample.count": "10", "seed": "0", "output.dir": "out", "output.timings": "false",
    "threads": "1", "domain.holes": "", "kernel.order": "auto", "kernel.s": "0.375",
    "kernel.length": "1",
}

DEFAULTS = {
    "heat": {"domain.kind": "square", "domain.size": "2.5", "domain.origin": "-1.25, -1.25",
             "basis.vanishing_moments": "1", "kernel.name": "fractional_laplacian"},
    "sample": {"domain.kind": "square", "domain.size": "4", "domain.origin": "0, 0",
               "basis.vanishing_moments": "5", "kernel.name": "exponential"},
    "factor": {"domain.kind": "interval", "domain.size": "1", "domain.origin": "0",
               "basis.vanishing_moments": "1", "kernel.name": "fractional_laplacian"},
}


def parse_text(text: str) -> dict:
    raw = {}
    for ln, line in enumerate(text.splitlines(), 1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"line {ln}", f"expected 'key = value', got {line.strip()!r}")
        key, value = (t.strip() for t in body.split("=", 1))
        if key not in KEYS:
            raise ConfigError(key, f"unknown key (line {ln})")
        if key in raw:
            raise ConfigError(key, f"duplicate key (line {ln})")
        raw[key] = value
    return raw


def _float(key, v):
    try:
        return float(v)
    except ValueError:
        raise ConfigError(key, f"expected a number, got {v!r}") from None


def _int(key, v):
    try:
        return int(v)
    except ValueError:
        raise ConfigError(key, f"expected an integer, got {v!r}") from None


def _floats(key, v):
    return tuple(_float(key, t) for t in v.replace(",", " ").split())


def _bool(key, v):
    if v.lower() in ("true", "yes", "1"):
        return True
    if v.lower() in ("false", "no", "0"):
        return False
    raise ConfigError(key, f"expected true/false, got {v!r}")


@dataclass
class RunConfig:
    values: dict             # effective string values, every key present

    def get(self, key):
        return self.values[key]

    def text(self) -> str:
        return "".join(f"{k} = {self.values[k]}\n" for k in KEYS)

    # typed views -------------------------------------------------------
    @property
    def driver(self) -> str:
        return self.values["driver"]

    def domain(self):
        from .meshgeom import DomainSpec

        kind = self.values["domain.kind"]
        size = _float("domain.size", self.values["domain.size"])
        origin = _floats("domain.origin", self.values["domain.origin"])
        if len(origin) == 1 and kind != "interval":
            # a single number applies to every coordinate
            origin = origin * 2
        holes = []
        for part in self.values["domain.holes"].split(";"):
            if part.strip():
                box = _floats("domain.holes", part)
                if len(box) != 4:
                    raise ConfigError("domain.holes", "each hole needs 'x0 y0 x1 y1'")
                holes.append(box)
        try:
            return DomainSpec(kind, size, origin, tuple(holes))
        except ValueError as err:
            raise ConfigError("domain", str(err)) from None

    def number(self, key):
        return _float(key, self.values[key])

    def integer(self, key):
        return _int(key, self.values[key])

    def flag(self, key):
        return _bool(key, self.values[key])

    def delta(self, q) -> float:
        v = self.values["compression.delta"]
        d, dt = 1, self.integer("basis.vanishing_moments")
        return default_delta(d, dt, q) if v == "auto" else _float("compression.delta", v)

    def order2q(self):
        v = self.values["kernel.order"]
        return None if v == "auto" else _float("kernel.order", v)


def load(raw: dict, seed_override: int | None = None) -> RunConfig:
    driver = raw.get("driver", "heat")
    if driver not in DEFAULTS:
        raise ConfigError("driver", f"must be one of {sorted(DEFAULTS)}, got {driver!r}")
    values = {"driver": driver, **_COMMON, **DEFAULTS[driver], **raw}
    if seed_override is not None:
        values["seed"] = str(seed_override)
    cfg = RunConfig({k: values[k] for k in KEYS})
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> None:
    """Check every value and the compression constraints before any work."""
    from .kernels import make_kernel

    v = cfg.values
    if v["domain.kind"] not in ("interval", "square", "lshape"):
        raise ConfigError("domain.kind", "must be interval, square or lshape")
    dom = cfg.domain()
    level = cfg.integer("level")
    if not 0 <= level <= 12:
        raise ConfigError("level", f"must lie in [0, 12], got {level}")
    dt = cfg.integer("basis.vanishing_moments")
    if not 1 <= dt <= 8:
        raise ConfigError("basis.vanishing_moments", f"must lie in [1, 8], got {dt}")
    name = v["kernel.name"]
    if name not in ("fractional_laplacian", "exponential", "gaussian"):
        raise ConfigError("kernel.name", "must be fractional_laplacian, exponential or gaussian")
    s = cfg.number("kernel.s")
    if name == "fractional_laplacian" and not 0 < s < 0.5:
        raise ConfigError("kernel.s", f"must lie in (0, 0.5), got {s}")
    length = cfg.number("kernel.length")
    if not length > 0:
        raise ConfigError("kernel.length", f"must be positive, got {length}")
    kernel = make_kernel(name, dom.dim, s=s, length=length, order2q=cfg.order2q())
    a = cfg.number("compression.a")
    if not a > 1:
        raise ConfigError("compression.a", f"must satisfy a > 1, got {a}")
    delta = cfg.delta(kernel.q)
    lo, hi = 1, dt + kernel.order2q
    if not lo < delta < hi:
        raise ConfigError("compression.delta",
                          f"must satisfy d < delta < dtilde + 2q, i.e. {lo} < delta < {hi:g}; got {delta}")
    if v["ordering.method"] not in ("nested_dissection", "levelwise"):
        raise ConfigError("ordering.method", "must be nested_dissection or levelwise")
    if cfg.integer("ordering.leaf_size") < 1:
        raise ConfigError("ordering.leaf_size", "must be at least 1")
    th = cfg.number("heat.theta")
    if not 0 <= th <= 1:
        raise ConfigError("heat.theta", f"must lie in [0, 1], got {th}")
    if not cfg.number("heat.T") > 0:
        raise ConfigError("heat.T", "must be positive")
    if cfg.integer("heat.steps") < 1:
        raise ConfigError("heat.steps", "must be at least 1")
    if cfg.integer("heat.snapshot_every") < 1:
        raise ConfigError("heat.snapshot_every", "must be at least 1")
    if cfg.integer("sample.count") < 1:
        raise ConfigError("sample.count", "must be at least 1")
    seed = cfg.integer("seed")
    if not 0 <= seed < 2 ** 64:
        raise ConfigError("seed", "must be an unsigned 64-bit integer")
    if cfg.integer("threads") < 1:
        raise ConfigError("threads", "must be at least 1")
    cfg.flag("output.timings")
    if cfg.driver == "heat" and name != "fractional_laplacian":
        raise ConfigError("kernel.name", "the heat driver needs the fractional Laplacian")
    if cfg.driver == "sample" and name == "fractional_laplacian":
        raise ConfigError("kernel.name", "the sample driver needs a covariance kernel")
