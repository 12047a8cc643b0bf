"""Experiment configuration: key = value text files with fail-fast validation.

The canonical serialization (sorted keys, 17-digit floats) is hashed to anchor
reproducibility claims: a record's config_hash plus the master seed determine
every output byte at fixed parallelism.
"""

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

__all__ = ["ExperimentConfig", "parse_config", "load_config"]

KINDS = ("ids", "silt", "pam", "constants", "tauberian", "riesz")

# key -> (type, default); list-valued keys hold comma-separated floats
_SCHEMA = {
    "kind": (str, None),
    "L": (float, 4.0),
    "n": (int, 127),
    "eps": (float, 0.05),
    "eps_ladder": (list, None),
    "t": (float, 0.5),
    "t_grid": (list, None),
    "m_paths": (int, 10000),
    "n_t": (int, None),
    "realizations": (int, 16),
    "lambda_min": (float, -1.0),
    "lambda_max": (float, 0.5),
    "lambda_points": (int, 61),
    "thresholds": (list, None),
    "probes": (int, 16),
    "d": (int, 2),
    "sigma": (float, 2.0),
    "sigma_list": (list, None),
    "nu": (float, 1.0),
    "reg": (float, 0.1),
    "lags": (list, None),
    "master_seed": (int, 0),
    "output_dir": (str, "out"),
    "parallelism": (int, 1),
}


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    params: dict = field(default_factory=dict)

    def __getattr__(self, name):
        params = object.__getattribute__(self, "params")
        if name in params:
            return params[name]
        if name in _SCHEMA:
            return _SCHEMA[name][1]
        raise AttributeError(name)

    def canonical(self):
        from .records import fmt_float

        items = [("kind", self.kind)]
        for key in sorted(self.params):
            val = self.params[key]
            if isinstance(val, list):
                txt = ",".join(fmt_float(v) for v in val)
            elif isinstance(val, float):
                txt = fmt_float(val)
            else:
                txt = str(val)
            items.append((key, txt))
        return "\n".join(f"{k}={v}" for k, v in items)

    def digest(self):
        return hashlib.sha256(self.canonical().encode()).hexdigest()[:16]

    def validate(self):
        """All module preconditions checkable before launch; raises ValueError."""
        problems = []
        if self.kind not in KINDS:
            problems.append(f"kind: unknown experiment {self.kind!r} (choose from {KINDS})")
        for key in ("n", "m_paths", "realizations", "lambda_points", "probes", "parallelism"):
            if key in self.params and self.params[key] <= 0:
                problems.append(f"{key}: must be positive, got {self.params[key]}")
        ladder = self.params.get("eps_ladder")
        if ladder is not None:
            if any(e <= 0 for e in ladder):
                problems.append("eps_ladder: entries must be positive")
            if any(b >= a for a, b in zip(ladder, ladder[1:])):
                problems.append(f"eps_ladder: must be strictly decreasing, got {ladder}")
        if self.kind in ("ids", "pam", "riesz"):
            h = self.L / (self.n + 1)
            if self.kind in ("ids", "pam"):
                for e in ladder or [self.eps]:
                    if e < 4 * h * h:
                        problems.append(
                            f"eps={e}: under-resolved, need eps >= 4 h^2 = {4 * h * h:.6g}"
                        )
            if self.kind == "riesz":
                if self.reg < 2 * h:
                    problems.append(f"reg={self.reg}: need reg >= 2h = {2 * h:.6g}")
                if not 0 < self.sigma < min(2, self.d):
                    problems.append(f"sigma={self.sigma}: need 0 < sigma < min(2, d)")
        if self.kind == "ids" and self.lambda_min >= self.lambda_max:
            problems.append("lambda window: need lambda_min < lambda_max")
        if self.kind == "silt":
            eps_min = min(ladder) if ladder else self.eps
            if self.params.get("n_t") is not None:
                dt = self.t / self.n_t
                if dt > eps_min / 10:
                    problems.append(
                        f"n_t={self.n_t}: dt={dt:.3g} violates dt <= eps/10 for eps={eps_min}"
                    )
            th = self.params.get("thresholds")
            if th is not None and any(b <= a for a, b in zip(th, th[1:])):
                problems.append("thresholds: must be strictly increasing")
        if self.kind == "tauberian":
            sl = self.params.get("sigma_list")
            if sl is None and "sigma" in self.params:
                sl = [self.params["sigma"]]
            for s in sl or []:
                if not 0 < s < 2:
                    problems.append(f"sigma={s}: conversions need 0 < sigma < 2")
        if problems:
            raise ValueError("config validation failed:\n  " + "\n  ".join(problems))
        return self


def parse_config(text):
    params = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _SCHEMA:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
        typ = _SCHEMA[key][0]
        try:
            if typ is list:
                params[key] = [float(v) for v in value.split(",") if v.strip()]
            elif typ is int:
                params[key] = int(value)
            elif typ is float:
                params[key] = float(value)
            else:
                params[key] = value
        except ValueError as exc:
            raise ValueError(f"line {lineno}: cannot parse {key} = {value!r}") from exc
    if "kind" not in params:
        raise ValueError("config is missing the 'kind' key")
    kind = params.pop("kind")
    return ExperimentConfig(kind=kind, params=params)


def load_config(path):
    return parse_config(Path(path).read_text())
