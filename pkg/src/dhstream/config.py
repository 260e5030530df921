"""Run configuration: one JSON document with a section per component."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .evaluation import DISTANCES
from .generator import SCENARIOS, GeneratorConfig, make_scenario
from .hawkes import DEFAULT_DELAYS, DEFAULT_WIDTHS, HawkesParams, KernelConfig
from .smc import SAMPLING_MODES, SmcConfig


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = problems
        super().__init__("invalid configuration: " + "; ".join(problems))


DEFAULTS = {
    "hawkes": {
        "base_intensity": 0.05,
        "reference_delays": list(DEFAULT_DELAYS),
        "bandwidths": list(DEFAULT_WIDTHS),
        "truncation_window": None,
    },
    "priors": {"content_pseudo_count": 0.01, "vendor_pseudo_count": 0.1},
    "smc": {
        "num_particles": 8, "ess_threshold": 0.5, "seed": 0, "sampling": "sample",
        "use_vendor": True, "use_content": True, "use_time": True, "refit_every": 10,
    },
    "generator": {
        "scenario": "separable", "num_events": 200, "num_sources": 5, "seed": 0,
        "base_intensity": None, "alpha0": None, "theta0": 0.01, "eta0": 0.1,
        "vocab_size": 200, "num_vendors": 20, "mean_content_length": 8.0,
    },
    "evaluation": {
        "cv_window": 110, "cv_top_k": 10, "report_top_k": 15, "silhouette_distance": "euclidean",
    },
    "output": {"trace_step": 1.0},
    "input": {"origin": None, "stopwords": None},
    "benchmark": {
        "scenarios": ["separable", "vendor-only"], "seeds": 20, "num_events": 200,
        "num_sources": 5, "workers": 1,
    },
}

_NUMBER = (int, float)


def _is_num(x) -> bool:
    return isinstance(x, _NUMBER) and not isinstance(x, bool)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _checks():
    pos = lambda x: _is_num(x) and x > 0  # noqa: E731
    pos_int = lambda x: _is_int(x) and x > 0  # noqa: E731
    nonneg_int = lambda x: _is_int(x) and x >= 0  # noqa: E731
    pos_list = lambda x: isinstance(x, list) and len(x) > 0 and all(pos(v) for v in x)  # noqa: E731
    boolean = lambda x: isinstance(x, bool)  # noqa: E731
    return {
        "hawkes": {
            "base_intensity": pos, "reference_delays": pos_list, "bandwidths": pos_list,
            "truncation_window": lambda x: x is None or pos(x),
        },
        "priors": {"content_pseudo_count": pos, "vendor_pseudo_count": pos},
        "smc": {
            "num_particles": pos_int, "ess_threshold": lambda x: _is_num(x) and 0 < x <= 1,
            "seed": nonneg_int, "sampling": lambda x: x in SAMPLING_MODES,
            "use_vendor": boolean, "use_content": boolean, "use_time": boolean,
            "refit_every": pos_int,
        },
        "generator": {
            "scenario": lambda x: x is None or x in SCENARIOS, "num_events": pos_int,
            "num_sources": pos_int, "seed": nonneg_int,
            "base_intensity": lambda x: x is None or pos(x),
            "alpha0": lambda x: x is None or pos_list(x), "theta0": pos, "eta0": pos,
            "vocab_size": pos_int, "num_vendors": pos_int,
            "mean_content_length": lambda x: _is_num(x) and x >= 0,
        },
        "evaluation": {
            "cv_window": pos_int, "cv_top_k": lambda x: _is_int(x) and x >= 2,
            "report_top_k": pos_int, "silhouette_distance": lambda x: x in DISTANCES,
        },
        "output": {"trace_step": lambda x: _is_num(x) and x >= 0},
        "input": {"origin": lambda x: x is None or isinstance(x, str),
                  "stopwords": lambda x: x is None or isinstance(x, str)},
        "benchmark": {
            "scenarios": lambda x: isinstance(x, list) and len(x) > 0 and all(s in SCENARIOS for s in x),
            "seeds": pos_int, "num_events": pos_int, "num_sources": pos_int, "workers": pos_int,
        },
    }


@dataclass
class RunConfig:
    data: dict

    @classmethod
    def from_dict(cls, raw: dict | None) -> "RunConfig":
        raw = raw or {}
        problems = []
        if not isinstance(raw, dict):
            raise ConfigError(["top level must be a JSON object"])
        data = copy.deepcopy(DEFAULTS)
        checks = _checks()
        for section, values in raw.items():
            if section not in DEFAULTS:
                problems.append(f"unknown section '{section}'")
                continue
            if not isinstance(values, dict):
                problems.append(f"section '{section}' must be an object")
                continue
            for key, value in values.items():
                if key not in DEFAULTS[section]:
                    problems.append(f"unknown key '{section}.{key}'")
                elif not checks[section][key](value):
                    problems.append(f"invalid value for '{section}.{key}': {value!r}")
                else:
                    data[section][key] = value
        cfg = cls(data)
        if not problems:
            problems.extend(cfg._cross_checks())
        if problems:
            raise ConfigError(problems)
        return cfg

    @classmethod
    def load(cls, path: str | Path | None) -> "RunConfig":
        if path is None:
            return cls.from_dict({})
        try:
            raw = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError([f"config file not found: {path}"]) from None
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config is not valid JSON: {exc.msg} (line {exc.lineno})"]) from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def dumps(self) -> str:
        return json.dumps(self.data, sort_keys=True, indent=2)

    def override(self, section: str, **values) -> "RunConfig":
        raw = self.to_dict()
        raw[section].update({k: v for k, v in values.items() if v is not None})
        return RunConfig.from_dict(raw)

    def _cross_checks(self) -> list[str]:
        out = []
        try:
            self.kernels()
        except ValueError as exc:
            out.append(f"hawkes: {exc}")
        g = self.data["generator"]
        if g["alpha0"] is not None and len(g["alpha0"]) != len(self.data["hawkes"]["reference_delays"]):
            out.append("invalid value for 'generator.alpha0': length must equal the number of kernels")
        if g["scenario"] is not None and g["num_sources"] > g["num_events"]:
            out.append("invalid value for 'generator.num_sources': exceeds generator.num_events")
        return out

    # component builders

    def kernels(self) -> KernelConfig:
        h = self.data["hawkes"]
        return KernelConfig(tuple(h["reference_delays"]), tuple(h["bandwidths"]), h["truncation_window"])

    def hawkes_params(self) -> HawkesParams:
        return HawkesParams(self.data["hawkes"]["base_intensity"], self.kernels())

    def smc(self) -> SmcConfig:
        return SmcConfig(**self.data["smc"])

    def generator(self) -> GeneratorConfig:
        g = self.data["generator"]
        kernels = self.kernels()
        lam0 = g["base_intensity"] or self.data["hawkes"]["base_intensity"]
        if g["scenario"] is not None:
            return make_scenario(g["scenario"], g["num_events"], g["num_sources"], g["seed"],
                                 kernels=kernels, base_intensity=lam0)
        alpha0 = tuple(g["alpha0"]) if g["alpha0"] else tuple([1.0] * kernels.num_kernels)
        return GeneratorConfig(
            params=HawkesParams(lam0, kernels), alpha0=alpha0, theta0=g["theta0"], eta0=g["eta0"],
            vocab_size=g["vocab_size"], num_vendors=g["num_vendors"], num_events=g["num_events"],
            mean_content_length=float(g["mean_content_length"]), seed=g["seed"])

    def fit_kwargs(self) -> dict:
        return {
            "params": self.hawkes_params(),
            "config": self.smc(),
            "content_pseudo_count": self.data["priors"]["content_pseudo_count"],
            "vendor_pseudo_count": self.data["priors"]["vendor_pseudo_count"],
            "trace_step": self.data["output"]["trace_step"],
            "top_k": self.data["evaluation"]["report_top_k"],
        }
