"""Command-line interface: ``rad train | score | watch | inject | eval | inspect``.

Exit codes: 0 success, 1 user/data error, 2 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import stat
import sys
import time
from pathlib import Path

import numpy as np

from . import modelfile
from .data import (
    CorruptionSpec,
    CsvSchema,
    evaluate,
    inject_corruption,
    load_csv,
    load_labels,
    standardize,
    write_csv,
)
from .errors import DataError, RadError
from .linalg import DEFAULT_RANK_TOL
from .median import MedianConfig
from .model import ThresholdMode, Verdict, normalize, score_rows, train_with_result
from .pcp import PcpConfig

logger = logging.getLogger("rad")

EXIT_OK, EXIT_USER, EXIT_INTERNAL = 0, 1, 2

SCORE_FIELDS = ("row_index", "score", "normalized", "verdict", "residual_norm", "latency_us")


# -- formatting --------------------------------------------------------------

def _json_float(x: float) -> str:
    # Python's json spelling; +inf is the normalized-score sentinel for theta == 0
    if x == math.inf:
        return "Infinity"
    return repr(x)


def _ndjson_record(i, s, q, verdict, e, latency) -> str:
    lat = "null" if latency is None else str(latency)
    return (
        f'{{"row_index":{i},"score":{s!r},"normalized":{_json_float(q)},'
        f'"verdict":"{verdict}","residual_norm":{e!r},"latency_us":{lat}}}\n'
    )


def _ndjson_error(i, message) -> str:
    return json.dumps({"row_index": i, "error": message}) + "\n"


def _csv_record(i, s, q, verdict, e) -> str:
    return f"{i},{s!r},{q!r},{verdict},{e!r}\n"


def _verdicts(scores: np.ndarray, threshold: float) -> list[str]:
    flags = scores > threshold
    return [Verdict.ANOMALY.value if f else Verdict.NORMAL.value for f in flags.tolist()]


# -- config file --------------------------------------------------------------

def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment. Keys are flag names."""
    out: dict[str, str] = {}
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc.strerror}") from exc
    for n, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{n}: expected 'key = value'")
        key, value = (p.strip() for p in line.split("=", 1))
        out[key.lstrip("-").replace("-", "_")] = value
    return out


def _apply_config(sub: argparse.ArgumentParser, config: dict[str, str]) -> None:
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in config.items():
        action = actions.get(key)
        if action is None or not action.option_strings:
            raise DataError(f"config key {key!r} is not an option of this command")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            if value.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise DataError(f"config key {key!r} needs a boolean, got {value!r}")
            defaults[key] = value.lower() in ("true", "1", "yes")
        else:
            defaults[key] = value  # argparse applies the type converter to string defaults
    sub.set_defaults(**defaults)


# -- shared arguments ---------------------------------------------------------

def _add_schema_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("CSV schema")
    g.add_argument("--features", help="comma-separated feature columns (default: all but timestamp/label)")
    g.add_argument("--timestamp-column")
    g.add_argument("--label-column")
    g.add_argument("--normal-token", default="Normal")
    g.add_argument("--attack-token", default="Attack")
    g.add_argument("--delimiter", default=",")


def _schema(args, features=None) -> CsvSchema:
    if args.features:
        features = [c.strip() for c in args.features.split(",") if c.strip()]
    return CsvSchema(
        feature_columns=features,
        timestamp_column=args.timestamp_column,
        label_column=args.label_column,
        normal_token=args.normal_token,
        attack_token=args.attack_token,
        delimiter=args.delimiter,
    )


# -- commands -----------------------------------------------------------------

def cmd_train(args, out) -> int:
    ds = load_csv(args.data, _schema(args))
    if ds.n_rows < 2:
        raise DataError("training needs at least 2 valid rows")
    X, scaler = ds.matrix, None
    if args.standardize:
        ds, scaler = standardize(ds)
        X = ds.matrix
    pcp_cfg = PcpConfig(
        lam=args.lam, tol=args.tol, max_iter=args.max_iter,
        mu0=args.mu0, rho=args.rho, mu_max=args.mu_max,
    )
    med_cfg = MedianConfig(tol=args.median_tol, max_iter=args.median_max_iter)
    model, res = train_with_result(
        X, pcp_cfg, med_cfg, args.rank_tol, ThresholdMode(args.threshold_mode), args.rank
    )
    nbytes = modelfile.save(args.out, modelfile.ModelFile(model, ds.column_names, scaler), args.binary)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("iteration,residual_frobenius\n")
            for k, r in enumerate(res.residual_history, 1):
                fh.write(f"{k},{r!r}\n")
    out.write(
        f"r={model.r} theta={model.threshold!r} iterations={res.iterations} "
        f"converged={str(res.converged).lower()} bytes={nbytes}\n"
    )
    if not res.converged:
        print(f"warning: PCP stopped after {res.iterations} iterations without converging", file=sys.stderr)
    if model.threshold <= 1e-9 * max(1.0, float(np.abs(model.median).max())):
        print(
            "warning: threshold is (numerically) zero; training data has no spread "
            "in the subspace, so any deviation will be flagged",
            file=sys.stderr,
        )
    return EXIT_OK


def _feature_schema(args, mf):
    return _schema(args, list(mf.column_names) if mf.column_names else None)


def cmd_score(args, out) -> int:
    mf = modelfile.load(args.model)
    model = mf.model
    ds = load_csv(args.data, _feature_schema(args, mf))
    if ds.d != model.d:
        raise DataError(f"data has {ds.d} feature columns, model expects {model.d}")
    X = mf.scaler.transform(ds.matrix) if mf.scaler else ds.matrix
    scores, resid = score_rows(model, X, with_residual=True)
    norm = np.atleast_1d(normalize(scores, model.threshold))
    verdicts = _verdicts(scores, model.threshold)

    records = {}
    for i, s, q, v, e in zip(ds.source_rows.tolist(), scores.tolist(), norm.tolist(), verdicts, resid.tolist()):
        if args.format == "ndjson":
            records[i] = _ndjson_record(i, s, q, v, e, None)
        else:
            records[i] = _csv_record(i, s, q, v, e)
    for rej in ds.rejected:
        if args.format == "ndjson":
            records[rej.row_index] = _ndjson_error(rej.row_index, rej.reason)
        else:
            records[rej.row_index] = f"{rej.row_index},,,ERROR,\n"
    if args.format == "csv":
        out.write("row_index,score,normalized,verdict,residual_norm\n")
    out.write("".join(records[i] for i in sorted(records)))
    return EXIT_OK


class _LineScorer:
    """Parses CSV lines for the watch loop and formats verdict records."""

    def __init__(self, mf: modelfile.ModelFile, delimiter: str = ","):
        self.mf = mf
        self.model = mf.model
        self.d = mf.model.d
        self.delim = delimiter.encode()
        self.columns: list[int] | None = None  # set when a header line maps names
        self.width = self.d
        self.seen_first = False
        self.row_index = 0

    def _try_header(self, line: bytes) -> bool:
        fields = [f.strip().decode("utf-8", "replace") for f in line.split(self.delim)]
        try:
            [float(f) for f in fields]
            return False
        except ValueError:
            pass
        names = self.mf.column_names
        if names and all(n in fields for n in names):
            self.width = len(fields)
            cols = [fields.index(n) for n in names]
            # header in model order needs no remapping, keep the fast path
            self.columns = None if cols == list(range(self.d)) and self.width == self.d else cols
            return True
        return False

    def _parse_fast(self, lines: list[bytes]):
        if self.columns is not None:
            return None
        try:
            text = b"\n".join(lines).decode("utf-8").split("\n")
            X = np.loadtxt(text, delimiter=self.delim.decode(), dtype=np.float64, comments=None, ndmin=2)
        except ValueError:  # includes UnicodeDecodeError
            return None
        if X.shape != (len(lines), self.d):
            return None
        return X

    def _parse_line(self, line: bytes) -> np.ndarray:
        fields = line.split(self.delim)
        if len(fields) != self.width:
            raise ValueError(f"expected {self.width} fields, got {len(fields)}")
        if self.columns is not None:
            fields = [fields[j] for j in self.columns]
        try:
            return np.array([float(f) for f in fields], dtype=np.float64)
        except ValueError:
            raise ValueError("non-numeric field") from None

    def process(self, lines: list[bytes], arrived_ns: int) -> str:
        lines = [ln.rstrip(b"\r") for ln in lines]
        lines = [ln for ln in lines if ln.strip()]
        if not self.seen_first and lines:
            self.seen_first = True
            if self._try_header(lines[0]):
                lines = lines[1:]
        if not lines:
            return ""
        start = self.row_index
        self.row_index += len(lines)

        X = self._parse_fast(lines)
        errors: dict[int, str] = {}
        if X is None:
            X = np.full((len(lines), self.d), np.nan)
            for k, line in enumerate(lines):
                try:
                    X[k] = self._parse_line(line)
                except ValueError as exc:
                    errors[k] = str(exc)
        bad = ~np.isfinite(X).all(axis=1)
        for k in np.flatnonzero(bad).tolist():
            errors.setdefault(k, "non-finite value")
        good = np.flatnonzero(~bad)

        out = []
        if good.size:
            Xg = X[good]
            if self.mf.scaler is not None:
                Xg = self.mf.scaler.transform(Xg)
            scores, resid = score_rows(self.model, Xg, with_residual=True)
            norm = np.atleast_1d(normalize(scores, self.model.threshold))
            verdicts = _verdicts(scores, self.model.threshold)
            latency = (time.perf_counter_ns() - arrived_ns) // 1000
            formatted = {
                k: _ndjson_record(start + k, s, q, v, e, latency)
                for k, s, q, v, e in zip(good.tolist(), scores.tolist(), norm.tolist(), verdicts, resid.tolist())
            }
        else:
            formatted = {}
        if not errors:
            return "".join(formatted.values())
        for k in range(len(lines)):
            out.append(formatted[k] if k in formatted else _ndjson_error(start + k, errors[k]))
        return "".join(out)


def cmd_watch(args, out) -> int:
    mf = modelfile.load(args.model)
    if args.input == "-":
        fd = sys.stdin.fileno()
        regular = False
    else:
        try:
            fd = os.open(args.input, os.O_RDONLY)
        except OSError as exc:
            raise DataError(f"cannot open input {args.input}: {exc.strerror}") from exc
        regular = stat.S_ISREG(os.fstat(fd).st_mode)
    follow = regular and args.follow
    poll = args.poll_ms / 1000.0
    scorer = _LineScorer(mf, args.delimiter)
    pending = b""
    try:
        while True:
            chunk = os.read(fd, 1 << 20)
            arrived = time.perf_counter_ns()
            if not chunk:
                if follow:
                    time.sleep(poll)
                    continue
                break
            pending += chunk
            *lines, pending = pending.split(b"\n")
            if lines:
                out.write(scorer.process(lines, arrived))
                out.flush()
        if pending.strip():
            out.write(scorer.process([pending], time.perf_counter_ns()))
            out.flush()
    except BrokenPipeError:
        pass
    except KeyboardInterrupt:
        pass
    finally:
        if args.input != "-":
            os.close(fd)
    return EXIT_OK


def cmd_inject(args, out) -> int:
    schema = _schema(args)
    ds = load_csv(args.data, schema)
    spec = CorruptionSpec(
        gaussian_sigma=args.sigma,
        burst_columns=tuple(c.strip() for c in args.burst_columns.split(",") if c.strip())
        if args.burst_columns else (),
        burst_period=args.burst_period,
        burst_length=args.burst_length,
        burst_magnitude=args.burst_magnitude,
        seed=args.seed,
    )
    write_csv(inject_corruption(ds, spec), args.out, schema)
    out.write(f"wrote {ds.n_rows} rows to {args.out}\n")
    return EXIT_OK


def _read_score_records(path):
    """(row_index, is_anomaly) pairs from a cmd_score CSV or NDJSON file."""
    text = Path(path).read_text(encoding="utf-8")
    pairs = []
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if lines and lines[0].lstrip().startswith("{"):
        for ln in lines:
            rec = json.loads(ln)
            if "verdict" in rec:
                pairs.append((int(rec["row_index"]), rec["verdict"] == "ANOMALY"))
    else:
        header = lines[0].split(",") if lines else []
        if "row_index" not in header or "verdict" not in header:
            raise DataError(f"{path}: not a score file (needs row_index and verdict columns)")
        ji, jv = header.index("row_index"), header.index("verdict")
        for ln in lines[1:]:
            f = ln.split(",")
            if f[jv] in ("NORMAL", "ANOMALY"):
                pairs.append((int(f[ji]), f[jv] == "ANOMALY"))
    return pairs


def cmd_eval(args, out) -> int:
    if not args.label_column:
        raise DataError("--label-column is required")
    labels = load_labels(args.labels, _schema(args))
    pairs = _read_score_records(args.scores)
    idx = np.array([i for i, _ in pairs], dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= labels.size):
        raise DataError(f"score row_index out of range for {labels.size} labels")
    if idx.size != labels.size:
        logger.warning("%d of %d rows have no verdict; they are left out", labels.size - idx.size, labels.size)
    flags = np.zeros(labels.size, dtype=bool)
    flags[idx] = [f for _, f in pairs]
    keep = np.zeros(labels.size, dtype=bool)
    keep[idx] = True
    metrics = evaluate(flags[keep], labels[keep])
    out.write(json.dumps(metrics.to_dict(), indent=1) + "\n")
    return EXIT_OK


def cmd_inspect(args, out) -> int:
    mf = modelfile.load(args.model)
    m = mf.model
    size = Path(args.model).stat().st_size
    fp = modelfile.footprint(m.d, m.r, args.scalar_bytes, args.with_buffers)
    info = {
        "d": m.d,
        "r": m.r,
        "threshold": m.threshold,
        "threshold_mode": m.threshold_mode.value,
        "parameter_count": m.parameter_count,
        "serialized_bytes": size,
        "footprint_scalars": fp["scalar_count"],
        "scalar_bytes": fp["scalar_bytes"],
        "footprint_bytes": fp["bytes"],
        "with_buffers": args.with_buffers,
        "converged": m.trained_on.get("converged"),
        "baseline": m.trained_on.get("baseline", False),
    }
    if args.json:
        out.write(json.dumps(info, indent=1) + "\n")
    else:
        for k, v in info.items():
            out.write(f"{k}: {v}\n")
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(prog="rad", description="Robust subspace anomaly detection.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)
    subs = {}

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="flat key = value file of option defaults")
        p.set_defaults(func=func)
        subs[name] = p
        return p

    p = add("train", cmd_train, "train a model from a CSV file")
    p.add_argument("data")
    p.add_argument("--out", required=True)
    _add_schema_args(p)
    p.add_argument("--lam", type=float, help="sparsity weight (default 1/sqrt(max(n, d)))")
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=10000)
    p.add_argument("--mu0", type=float)
    p.add_argument("--rho", type=float, default=1.5)
    p.add_argument("--mu-max", type=float)
    p.add_argument("--rank-tol", type=float, default=DEFAULT_RANK_TOL)
    p.add_argument("--rank", type=int, help="fix the subspace dimension instead of using --rank-tol")
    p.add_argument("--threshold-mode", choices=[m.value for m in ThresholdMode],
                   default=ThresholdMode.LOW_RANK_ROWS.value)
    p.add_argument("--median-tol", type=float)
    p.add_argument("--median-max-iter", type=int, default=1000)
    p.add_argument("--standardize", action="store_true", help="robust z-score columns before training")
    p.add_argument("--trace", help="write the PCP residual history as CSV")
    p.add_argument("--binary", action="store_true", help="store arrays as base64 float64")

    p = add("score", cmd_score, "score every row of a CSV file")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--format", choices=["csv", "ndjson"], default="csv")
    _add_schema_args(p)

    p = add("watch", cmd_watch, "score CSV lines as they arrive, NDJSON out")
    p.add_argument("model")
    p.add_argument("--input", default="-", help="path to tail, or - for stdin")
    p.add_argument("--poll-ms", type=float, default=200.0)
    p.add_argument("--no-follow", dest="follow", action="store_false",
                   help="stop at end of file instead of waiting for more lines")
    p.add_argument("--delimiter", default=",")

    p = add("inject", cmd_inject, "add Gaussian noise and periodic burst outliers")
    p.add_argument("data")
    p.add_argument("--out", required=True)
    _add_schema_args(p)
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--burst-columns")
    p.add_argument("--burst-period", type=int, default=25)
    p.add_argument("--burst-length", type=int, default=1)
    p.add_argument("--burst-magnitude", type=float, default=10.0)
    p.add_argument("--seed", type=int, default=0)

    p = add("eval", cmd_eval, "detection metrics for a score file against labels")
    p.add_argument("scores")
    p.add_argument("labels")
    _add_schema_args(p)

    p = add("inspect", cmd_inspect, "model summary and memory footprint")
    p.add_argument("model")
    p.add_argument("--with-buffers", action="store_true",
                   help="also count the runtime buffers x_j and A^T x_j")
    p.add_argument("--scalar-bytes", type=int, default=8)
    p.add_argument("--json", action="store_true")
    return parser, subs


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser, subs = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        try:
            args = parser.parse_args(argv)
            if getattr(args, "config", None):
                _apply_config(subs[args.command], read_config(args.config))
                args = parser.parse_args(argv)
        except SystemExit as exc:
            # usage errors are user errors; --help exits 0
            return EXIT_USER if exc.code else EXIT_OK
        logging.basicConfig(
            level=logging.WARNING - 10 * min(args.verbose, 2),
            format="%(levelname)s %(name)s: %(message)s",
        )
        return args.func(args, out)
    except RadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USER
    except Exception as exc:  # noqa: BLE001
        logger.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
