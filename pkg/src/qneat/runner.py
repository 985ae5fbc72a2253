"""Experiment orchestration: config files, runs, persisted histories, traces and summaries."""
from __future__ import annotations

import configparser
import csv
import io
import json
import os
import platform
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .evolution import Agent, EvolutionConfig, GenerationRecord, evolve, substream
from .genome import Genome, GenomeError
from .moo import evolve_moo
from .qaoa import QaoaParams, qaoa_optimize, qaoa_state
from .render import render_circuit
from .tasks.maxcut import Graph, GraphError, MaxCutFitness, maxcut_state, resolve_graph, sampling_accuracy
from .tasks.rl import CARTPOLE, ENVS, FROZENLAKE, RLFitness, rl_fitness

OUTPUT_ROOT_ENV = "QNEAT_OUTPUT_ROOT"
ALGOS = ("qneat", "qneat-moo", "qaoa")
HISTORY_COLUMNS = (
    "generation",
    "best_fitness",
    "top5_mean",
    "pop_mean",
    "n_rot",
    "n_cnot",
    "n_gates",
    "n_species",
    "accuracy",
    "evals_cumulative",
    "seconds",
    "algo",
    "p",
    "front_sizes",
    "best_objectives",
)
REPORT_EPISODES = 100
ACCURACY_SAMPLES = 100

# Reference hyperparameters per task family. survival_fraction is not a reference value: MaxCut runs use
# harder truncation because the 0.5 default stalls within 100 generations.
RL_PRESET = dict(population=150, sigma=0.01, p_w=0.3, p_rot=0.5, p_cnot=0.5, delta0=1.0, generations=50)
MAXCUT_PRESET = dict(
    population=200, sigma=0.01, p_w=0.6, p_rot=0.3, p_cnot=0.3, delta0=0.45, initial_layers=2,
    generations=100, survival_fraction=0.1,
)


class ConfigError(ValueError):
    pass


@dataclass
class QaoaSettings:
    p: int = 1
    learning_rate: float = 0.01
    epochs: int = 100


@dataclass
class ExperimentConfig:
    task: str
    algo: str
    seed: int = 0
    out: str = "runs/experiment"
    evolution: Optional[EvolutionConfig] = None
    qaoa: Optional[QaoaSettings] = None
    record_seconds: bool = False

    @property
    def is_maxcut(self) -> bool:
        return self.task.startswith("maxcut:")

    def graph(self) -> Graph:
        return resolve_graph(self.task.split(":", 1)[1])

    def validate(self) -> None:
        if self.algo not in ALGOS:
            raise ConfigError(f"unknown algo {self.algo!r}; choose from {ALGOS}")
        if not (self.task in ENVS or self.is_maxcut):
            raise ConfigError(f"unknown task {self.task!r}; use cartpole, frozenlake8x8 or maxcut:<graph>")
        if self.is_maxcut:
            try:
                self.graph()
            except (GraphError, OSError) as exc:
                raise ConfigError(f"cannot load graph: {exc}") from exc
        if self.algo == "qaoa":
            if not self.is_maxcut:
                raise ConfigError("qaoa only runs on maxcut tasks")
            if self.qaoa is None:
                raise ConfigError("qaoa runs need a [qaoa] section")
            if self.qaoa.p < 1 or self.qaoa.epochs < 1 or self.qaoa.learning_rate <= 0:
                raise ConfigError("qaoa needs p >= 1, epochs >= 1 and a positive learning_rate")
        else:
            if self.evolution is None:
                raise ConfigError(f"{self.algo} runs need an [evolution] section")
            try:
                self.evolution.validate()
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "algo": self.algo,
            "seed": self.seed,
            "out": self.out,
            "record_seconds": self.record_seconds,
            "evolution": asdict(self.evolution) if self.evolution else None,
            "qaoa": asdict(self.qaoa) if self.qaoa else None,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> ExperimentConfig:
        evo = data.get("evolution")
        qa = data.get("qaoa")
        return cls(
            task=data["task"],
            algo=data["algo"],
            seed=int(data.get("seed", 0)),
            out=data.get("out", "runs/experiment"),
            record_seconds=bool(data.get("record_seconds", False)),
            evolution=EvolutionConfig(**evo) if evo else None,
            qaoa=QaoaSettings(**qa) if qa else None,
        )


def _coerce(value: str, kind: type) -> Any:
    if kind is bool:
        lowered = value.strip().lower()
        if lowered in ("1", "true", "yes", "on"):
            return True
        if lowered in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {value!r}")
    return kind(value)


def _section_values(parser: configparser.ConfigParser, section: str, target) -> dict[str, Any]:
    types = {f.name: type(f.default) for f in fields(target)}
    out = {}
    for key, raw in parser.items(section):
        if key not in types:
            raise ConfigError(f"unknown key {key!r} in [{section}]")
        try:
            out[key] = _coerce(raw, types[key])
        except ValueError as exc:
            raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat ``key = value`` config format with ``[experiment]``, ``[evolution]``, ``[qaoa]`` sections."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from exc
    unknown = set(parser.sections()) - {"experiment", "evolution", "qaoa"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    if not parser.has_section("experiment"):
        raise ConfigError("config needs an [experiment] section")
    exp = dict(parser.items("experiment"))
    try:
        task, algo = exp.pop("task"), exp.pop("algo")
        seed = int(exp.pop("seed", 0))
        out = exp.pop("out", "runs/experiment")
        record_seconds = _coerce(exp.pop("record_seconds", "false"), bool)
    except KeyError as exc:
        raise ConfigError(f"[experiment] is missing {exc}") from exc
    except ValueError as exc:
        raise ConfigError(f"bad [experiment] value: {exc}") from exc
    if exp:
        raise ConfigError(f"unknown keys in [experiment]: {sorted(exp)}")

    config = ExperimentConfig(task=task, algo=algo, seed=seed, out=out, record_seconds=record_seconds)
    if algo == "qaoa":
        if parser.has_section("qaoa"):
            config.qaoa = QaoaSettings(**_section_values(parser, "qaoa", QaoaSettings))
    elif parser.has_section("evolution") or algo in ALGOS:
        values = _section_values(parser, "evolution", EvolutionConfig) if parser.has_section("evolution") else {}
        preset = dict(MAXCUT_PRESET if config.is_maxcut else RL_PRESET)
        if "initial_layers" not in values and "initial_layers" not in preset:
            raise ConfigError("[evolution] initial_layers is required for RL tasks (0, 1 or 2 in the reference runs)")
        merged = {**preset, **values, "rng_seed": seed}
        config.evolution = EvolutionConfig(**merged)
    config.validate()
    if config.evolution is not None:
        config.evolution.n_wires = task_wires(config)
    return config


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def task_wires(config: ExperimentConfig) -> int:
    if config.is_maxcut:
        return config.graph().n_nodes
    return ENVS[config.task].n_wires


def with_seed(config: ExperimentConfig, seed: int) -> ExperimentConfig:
    config = ExperimentConfig.from_dict(config.to_dict())
    config.seed = seed
    if config.evolution is not None:
        config.evolution.rng_seed = seed
    return config


def resolve_output(out: str | Path) -> Path:
    path = Path(out)
    root = os.environ.get(OUTPUT_ROOT_ENV)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


# Writing -------------------------------------------------------------------

def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ";".join(_cell(v) for v in value)
    return str(value)


def history_rows(records: Iterable[GenerationRecord], algo: str, p: Optional[int], seconds: Sequence[Optional[float]]):
    for rec, sec in zip(records, seconds):
        yield {
            "generation": rec.generation,
            "best_fitness": float(rec.best_fitness),
            "top5_mean": float(rec.top5_mean),
            "pop_mean": float(rec.pop_mean),
            "n_rot": rec.n_rot,
            "n_cnot": rec.n_cnot,
            "n_gates": rec.n_gates,
            "n_species": rec.n_species,
            "accuracy": rec.accuracy,
            "evals_cumulative": rec.evals_cumulative,
            "seconds": sec,
            "algo": algo,
            "p": p,
            "front_sizes": rec.front_sizes,
            "best_objectives": tuple(float(v) for v in rec.best_objectives),
        }


def write_history(path: Path, rows: Iterable[dict[str, Any]]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(HISTORY_COLUMNS)
    for row in rows:
        writer.writerow([_cell(row[c]) for c in HISTORY_COLUMNS])
    path.write_text(buf.getvalue())


def read_history(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != HISTORY_COLUMNS:
            raise ConfigError(f"{path}: unexpected history columns {reader.fieldnames}")
        return list(reader)


def _dump(path: Path, data: Any) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")


def _meta(config: ExperimentConfig) -> dict[str, Any]:
    return {
        "config": config.to_dict(),
        "seed": config.seed,
        "versions": {"qneat": __version__, "numpy": np.__version__, "python": platform.python_version()},
    }


@dataclass
class RunOutcome:
    out_dir: Path
    history: list[GenerationRecord] = field(default_factory=list)
    best: Optional[Agent] = None
    result: dict[str, Any] = field(default_factory=dict)


class _Clock:
    def __init__(self):
        self.start = time.perf_counter()
        self.marks: list[float] = []

    def mark(self) -> None:
        self.marks.append(time.perf_counter() - self.start)


def _run_qneat(config: ExperimentConfig, out: Path) -> RunOutcome:
    evo = config.evolution
    clock = _Clock()
    if config.is_maxcut:
        graph = config.graph()
        fitness = MaxCutFitness(graph)

        def annotate(record: GenerationRecord, agents: Sequence[Agent]) -> None:
            top = max(agents, key=lambda a: a.fitness)
            rng = substream(config.seed, "report", record.generation)
            record.accuracy = sampling_accuracy(maxcut_state(top.genome, graph), graph, ACCURACY_SAMPLES, rng)
            clock.mark()

        encoding = "H"
    else:
        fitness = RLFitness(config.task, evo.episodes_per_eval)

        def annotate(record: GenerationRecord, agents: Sequence[Agent]) -> None:
            clock.mark()

        encoding = "U"

    runner = evolve_moo if config.algo == "qneat-moo" else evolve
    best, history = runner(evo, fitness, annotate)

    result: dict[str, Any] = {
        "best_fitness": best.fitness,
        "n_rot": best.genome.n_rot,
        "n_cnot": best.genome.n_cnot,
        "n_gates": best.genome.n_gates,
        "generations": evo.generations,
    }
    report_rng = substream(config.seed, "report", evo.generations + 1)
    if config.is_maxcut:
        graph = config.graph()
        result["accuracy"] = sampling_accuracy(maxcut_state(best.genome, graph), graph, ACCURACY_SAMPLES, report_rng)
    else:
        result[f"mean_return_{REPORT_EPISODES}"] = rl_fitness(best.genome, config.task, REPORT_EPISODES, report_rng)

    seconds = clock.marks if config.record_seconds else [None] * len(history)
    write_history(out / "history.csv", history_rows(history, config.algo, None, seconds))
    _write_timing(out, clock.marks)
    _dump(out / "best_genome.json", best.genome.to_dict())
    _write_trace(out / "trace", best, encoding)
    _dump(out / "result.json", result)
    return RunOutcome(out, history, best, result)


def _run_qaoa(config: ExperimentConfig, out: Path) -> RunOutcome:
    graph = config.graph()
    settings = config.qaoa
    clock = _Clock()
    run = qaoa_optimize(graph, settings.p, settings.learning_rate, settings.epochs)
    records = []
    for epoch, (value, params, evals) in enumerate(zip(run.expectations, run.trajectory, run.evaluations)):
        rng = substream(config.seed, "report", epoch)
        acc = sampling_accuracy(qaoa_state(graph, params), graph, ACCURACY_SAMPLES, rng)
        records.append(
            GenerationRecord(epoch, value, value, value, run.n_rot, run.n_cnot, run.n_gates, 0, evals, accuracy=acc)
        )
        clock.mark()
    seconds = clock.marks if config.record_seconds else [None] * len(records)
    write_history(out / "history.csv", history_rows(records, "qaoa", settings.p, seconds))
    _write_timing(out, clock.marks)
    _dump(out / "best_params.json", {"gammas": list(run.params.gammas), "betas": list(run.params.betas)})
    result = {
        "expectation": run.expectations[-1],
        "accuracy": records[-1].accuracy,
        "n_rot": run.n_rot,
        "n_cnot": run.n_cnot,
        "n_gates": run.n_gates,
        "epochs": settings.epochs,
    }
    _dump(out / "result.json", result)
    return RunOutcome(out, records, None, result)


def _write_timing(out: Path, marks: Sequence[float]) -> None:
    lines = ["generation,seconds\n"] + [f"{i},{t!r}\n" for i, t in enumerate(marks)]
    (out / "timing.csv").write_text("".join(lines))


def _write_trace(trace_dir: Path, best: Agent, encoding: str) -> None:
    trace_dir.mkdir(parents=True, exist_ok=True)
    for old in trace_dir.glob("gen_*.json"):
        old.unlink()
    for agent in best.lineage():
        _dump(
            trace_dir / f"gen_{agent.generation:04d}.json",
            {"generation": agent.generation, "fitness": agent.fitness, "encoding": encoding, "genome": agent.genome.to_dict()},
        )


def run_experiment(config: ExperimentConfig, out: Optional[str | Path] = None) -> RunOutcome:
    """Run one experiment and write its artifacts.

    Raises ``ConfigError`` for invalid configs before anything is written.
    Any later failure leaves a ``FAILED`` marker in the output directory.
    """
    config.validate()
    out_dir = resolve_output(out if out is not None else config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    marker = out_dir / "FAILED"
    if marker.exists():
        marker.unlink()
    _dump(out_dir / "meta.json", _meta(config))
    try:
        if config.algo == "qaoa":
            return _run_qaoa(config, out_dir)
        return _run_qneat(config, out_dir)
    except Exception as exc:
        marker.write_text(f"{type(exc).__name__}: {exc}\n")
        raise


# Trace replay and summaries ------------------------------------------------

class TraceError(RuntimeError):
    pass


def replay_trace(path: str | Path) -> list[str]:
    """One ASCII diagram per recorded generation, in generation order."""
    path = Path(path)
    if (path / "trace").is_dir():
        path = path / "trace"
    if not path.is_dir():
        raise TraceError(f"no trace directory at {path}")
    files = sorted(path.glob("gen_*.json"))
    if not files:
        raise TraceError(f"trace directory {path} is empty")
    diagrams = []
    for f in files:
        try:
            data = json.loads(f.read_text())
            genome = Genome.from_dict(data["genome"])
            header = f"generation {int(data['generation'])}  fitness {data.get('fitness')!r}  gates {genome.n_gates}"
            diagrams.append(header + "\n" + render_circuit(genome, data.get("encoding", "U")))
        except (OSError, ValueError, KeyError, TypeError, GenomeError) as exc:
            raise TraceError(f"corrupt trace file {f}: {exc}") from exc
    return diagrams


SUMMARY_COLUMNS = (
    "run", "algo", "p", "generations", "final_best_fitness", "final_top5_mean", "final_accuracy",
    "n_rot", "n_cnot", "n_gates", "generations_to_threshold",
)


def summarize(paths: Sequence[str | Path], threshold: Optional[float] = None) -> list[dict[str, str]]:
    """Final-generation figures of each history, plus the first generation whose top-5 mean reaches ``threshold``."""
    if not paths:
        raise ConfigError("summarize needs at least one history file")
    rows = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            path = path / "history.csv"
        history = read_history(path)
        if not history:
            raise ConfigError(f"{path}: history is empty")
        last = history[-1]
        reached = ""
        if threshold is not None:
            for row in history:
                if float(row["top5_mean"]) >= threshold:
                    reached = row["generation"]
                    break
        rows.append({
            "run": str(path.parent if path.name == "history.csv" else path),
            "algo": last["algo"],
            "p": last["p"],
            "generations": str(len(history)),
            "final_best_fitness": last["best_fitness"],
            "final_top5_mean": last["top5_mean"],
            "final_accuracy": last["accuracy"],
            "n_rot": last["n_rot"],
            "n_cnot": last["n_cnot"],
            "n_gates": last["n_gates"],
            "generations_to_threshold": reached,
        })
    return rows


def format_summary(rows: Sequence[dict[str, str]], fmt: str = "text") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
        return buf.getvalue()
    if fmt == "json":
        return json.dumps(list(rows), indent=2) + "\n"
    widths = {c: max(len(c), *(len(r[c]) for r in rows)) for c in SUMMARY_COLUMNS}
    lines = ["  ".join(c.ljust(widths[c]) for c in SUMMARY_COLUMNS)]
    lines += ["  ".join(r[c].ljust(widths[c]) for c in SUMMARY_COLUMNS) for r in rows]
    return "\n".join(line.rstrip() for line in lines) + "\n"
