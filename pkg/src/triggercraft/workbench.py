"""Command-line workbench tying the pipeline together.

Subcommands::

    rank        rank a vocabulary against a wake word, write list + manifest
    tune        filter triggers, grid-search scale factors, optional LOOCV
    ngrams      extract n-gram candidates from transcripts
    blocklist   show the blocklist for a wake word
    weights     build a weight table from probe scores / check a stored one
    probe-plan  emit the probe cells an external scorer should measure
    harness     analyze measurement logs into a summary table

All commands read a JSON config (``--config``) describing the shared
resources: dictionary, wake words, optional weight table, grid, seed, and
output directory.  Paths in the config are resolved relative to the config
file.  Every run is deterministic for a fixed seed; output files carry a
timestamp header unless ``--no-timestamp`` is given.

Exit codes: 0 on success, 1 for usage or configuration problems, 2 for
data errors (unparseable or inconsistent inputs).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import candidates as cand_mod
from . import harness as harness_mod
from . import tuning as tuning_mod
from . import weights as weights_mod
from .candidates import (
    DEFAULT_VOICES,
    Candidate,
    RankedList,
    Voice,
    build_blocklist,
    dictionary_candidates,
    export_manifest,
    extract_ngrams,
    rank_candidates,
)
from .distance import CostModel, ScaleFactors, WeightTable
from .errors import ConfigError, TriggerCraftError
from .lexicon import (
    PhoneInventory,
    PronouncingDictionary,
    WakeWordSpec,
    load_dictionary,
    phrase_phones,
)
from .tuning import Grid, cross_validate, filter_triggers, grid_search, load_trigger_labels
from .weights import (
    build_weight_table,
    load_probe_scores,
    load_weight_table,
    plan_rows,
    sample_probe_words,
    store_weight_table,
)

__all__ = ["WorkbenchConfig", "main"]

log = logging.getLogger(__name__)

GRID_PRESETS = {
    "default": Grid.default,
    "extended": Grid.extended,
}


@dataclass
class WorkbenchConfig:
    """Parsed workbench configuration plus lazily loaded resources."""

    base_dir: Path
    dictionary_path: Path
    wake_words_path: Path
    weight_table_path: Path | None
    scales: ScaleFactors
    grid: Grid
    top_k: int
    seed: int
    out_dir: Path
    voices: tuple[Voice, ...]
    media_lengths: dict[str, float] = field(default_factory=dict)
    inventory_path: Path | None = None

    _dictionary: PronouncingDictionary | None = None
    _wake_words: list[WakeWordSpec] | None = None
    _weight_table: WeightTable | None = None

    def dictionary(self) -> PronouncingDictionary:
        if self._dictionary is None:
            inventory = PhoneInventory.default()
            if self.inventory_path is not None:
                with open(self.inventory_path, encoding="utf-8") as fh:
                    inventory = PhoneInventory.load(fh)
            try:
                with open(self.dictionary_path, encoding="utf-8") as fh:
                    self._dictionary = load_dictionary(fh, inventory)
            except OSError as exc:
                raise ConfigError(f"cannot read dictionary: {exc}") from None
            except TriggerCraftError as exc:
                raise ConfigError(f"bad dictionary file: {exc}") from None
        return self._dictionary

    def wake_words(self) -> list[WakeWordSpec]:
        if self._wake_words is None:
            try:
                with open(self.wake_words_path, encoding="utf-8") as fh:
                    raw = json.load(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read wake words: {exc}") from None
            except json.JSONDecodeError as exc:
                raise ConfigError(f"bad wake-word file: {exc}") from None
            specs = []
            try:
                for entry in raw:
                    specs.append(
                        WakeWordSpec(
                            id=entry["id"],
                            text=entry["text"],
                            phones=tuple(entry["phones"]),
                            explicit_blocklist=tuple(entry.get("blocklist", ())),
                        )
                    )
            except (KeyError, TypeError, ValueError) as exc:
                raise ConfigError(f"bad wake-word entry: {exc!r}") from None
            if not specs:
                raise ConfigError("wake-word file lists no wake words")
            self._wake_words = specs
        return self._wake_words

    def wake_word(self, wake_id: str) -> WakeWordSpec:
        for spec in self.wake_words():
            if spec.id == wake_id:
                return spec
        known = [w.id for w in self.wake_words()]
        raise ConfigError(f"unknown wake word {wake_id!r}; configured: {known}")

    def weight_table(self) -> WeightTable:
        if self._weight_table is None:
            if self.weight_table_path is None:
                raise ConfigError("this command needs a 'weight_table' entry in the config")
            try:
                with open(self.weight_table_path, encoding="utf-8") as fh:
                    self._weight_table = load_weight_table(fh)
            except OSError as exc:
                raise ConfigError(f"cannot read weight table: {exc}") from None
            except TriggerCraftError as exc:
                raise ConfigError(f"bad weight table: {exc}") from None
        return self._weight_table

    def model(self, variant: str) -> CostModel:
        if variant == "unweighted":
            return CostModel.unweighted()
        if variant == "simple":
            return CostModel.simple(self.scales)
        return CostModel.advanced(self.scales, self.weight_table())


def _parse_scales(raw) -> ScaleFactors:
    try:
        return ScaleFactors(float(raw["s"]), float(raw["d"]), float(raw["i"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad 'scales' entry: {exc!r}") from None


def _parse_grid(raw) -> Grid:
    if raw is None:
        return Grid.default()
    if isinstance(raw, str):
        preset = GRID_PRESETS.get(raw)
        if preset is None:
            raise ConfigError(f"unknown grid preset {raw!r}; known: {sorted(GRID_PRESETS)}")
        return preset()
    try:
        return Grid.uniform(float(raw["lo"]), float(raw["hi"]), float(raw["step"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad 'grid' entry: {exc!r}") from None


def _parse_voices(raw) -> tuple[Voice, ...]:
    if raw is None:
        return DEFAULT_VOICES
    try:
        return tuple(Voice(v["id"], v["kind"], v["gender"]) for v in raw)
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"bad 'voices' entry: {exc!r}") from None


def load_config(path: str | Path) -> WorkbenchConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from None
    base = path.parent

    def resolve(key: str, required: bool = True) -> Path | None:
        value = raw.get(key)
        if value is None:
            if required:
                raise ConfigError(f"config is missing {key!r}")
            return None
        resolved = base / value
        if not resolved.exists():
            raise ConfigError(f"{key} file does not exist: {resolved}")
        return resolved

    try:
        top_k = int(raw.get("top_k", 100))
        seed = int(raw.get("seed", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad numeric config entry: {exc!r}") from None
    if top_k < 1:
        raise ConfigError(f"top_k must be >= 1, got {top_k}")
    media_lengths = raw.get("media_lengths") or {}
    try:
        media_lengths = {str(k): float(v) for k, v in media_lengths.items()}
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"bad 'media_lengths' entry: {exc!r}") from None
    return WorkbenchConfig(
        base_dir=base,
        dictionary_path=resolve("dictionary"),
        wake_words_path=resolve("wake_words"),
        weight_table_path=resolve("weight_table", required=False),
        inventory_path=resolve("inventory", required=False),
        scales=_parse_scales(raw.get("scales", {"s": 1.0, "d": 1.0, "i": 1.0})),
        grid=_parse_grid(raw.get("grid")),
        top_k=top_k,
        seed=seed,
        out_dir=base / raw.get("out_dir", "out"),
        voices=_parse_voices(raw.get("voices")),
        media_lengths=media_lengths,
    )


# ---------------------------------------------------------------------------
# Output helpers.


class OutputWriter:
    def __init__(self, out_dir: Path, timestamp: bool):
        self.out_dir = out_dir
        self.timestamp = timestamp

    def write(self, name: str, body: str) -> Path:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        path = self.out_dir / name
        header = ""
        if self.timestamp:
            stamp = datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")
            header = f"# generated {stamp}\n"
        path.write_text(header + body, encoding="utf-8")
        log.info("wrote %s", path)
        return path


def _fmt(value: float) -> str:
    return f"{value:.12g}"


def format_ranked_list(ranked: RankedList) -> str:
    model = ranked.model
    scales = model.scales
    lines = [
        "# model={} s={} d={} i={} k={} seed={} boundary_pool_size={}".format(
            model.variant, _fmt(scales.s), _fmt(scales.d), _fmt(scales.i),
            ranked.k, ranked.seed, ranked.boundary_pool_size,
        ),
        f"# wake={ranked.wake.id} text={ranked.wake.text}",
        "rank\tlabel\tL\tS_n\tD_n\tI_n",
    ]
    for item in ranked.items:
        b = item.breakdown
        lines.append(
            f"{item.rank}\t{item.candidate.label}\t{_fmt(item.distance)}"
            f"\t{b.S_n}\t{b.D_n}\t{b.I_n}"
        )
    return "\n".join(lines) + "\n"


def format_manifest(manifest: cand_mod.SynthesisManifest) -> str:
    lines = ["label\tvoice\tkind\tgender\tfile"]
    for entry in manifest.entries:
        lines.append(
            f"{entry.label}\t{entry.voice_id}\t{entry.voice_kind}"
            f"\t{entry.gender}\t{entry.file_name}"
        )
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_rank(config: WorkbenchConfig, args, writer: OutputWriter) -> int:
    wake = config.wake_word(args.wake)
    dictionary = config.dictionary()
    model = config.model(args.model)
    blocked = build_blocklist(wake, dictionary)
    if args.source == "dictionary":
        vocab_by_name = {"dictionary": dictionary_candidates(dictionary)}
    else:
        if args.transcripts is None:
            raise ConfigError("--source transcripts needs --transcripts FILE")
        with open(args.transcripts, encoding="utf-8") as fh:
            lines = fh.readlines()
        vocab_by_name = {
            f"{n}-gram": extract_ngrams(lines, n, dictionary) for n in args.ngram_sizes
        }
    for name, vocab in vocab_by_name.items():
        ranked = rank_candidates(
            vocab, wake, model, config.top_k, config.seed,
            blocklist=blocked, workers=args.workers,
        )
        suffix = f"{args.wake}_{name}".replace(" ", "_")
        writer.write(f"rank_{suffix}.tsv", format_ranked_list(ranked))
        writer.write(
            f"manifest_{suffix}.tsv", format_manifest(export_manifest(ranked, config.voices))
        )
    return 0


def cmd_tune(config: WorkbenchConfig, args, writer: OutputWriter) -> int:
    with open(args.triggers, encoding="utf-8") as fh:
        triggers = load_trigger_labels(fh)
    dictionary = config.dictionary()
    vocab = dictionary_candidates(dictionary)
    # Triggers rank against the word list, so phrase triggers (and any
    # trigger missing from it) join the vocabulary as candidates.
    known = {cand_mod.normalize_label(c.label) for c in vocab}
    for trigger in triggers:
        label = cand_mod.normalize_label(trigger.trigger_label)
        if label not in known:
            known.add(label)
            vocab.append(
                Candidate(
                    label=label,
                    prons=tuple(phrase_phones(dictionary, label.split())),
                    source="trigger",
                )
            )
    wakes = config.wake_words()
    blocklists = {w.id: build_blocklist(w, dictionary) for w in wakes}
    table = config.weight_table() if args.variant == "advanced" else None
    kept = filter_triggers(
        triggers, vocab, wakes, config.grid,
        threshold=args.filter_threshold, variant=args.variant, table=table,
        blocklists=blocklists,
    )
    result = grid_search(
        kept, vocab, wakes, config.grid, args.variant, table, blocklists=blocklists
    )
    validation = None
    if args.loocv:
        per_wake: dict[str, list] = {w.id: [] for w in wakes}
        for trigger in kept:
            per_wake[trigger.wake_id].append(trigger)
        validation = cross_validate(
            per_wake, vocab, wakes, config.grid, args.variant, table,
            k=config.top_k, seed=config.seed, blocklists=blocklists,
        )
    report = tuning_mod.format_tuning_report(
        result, cross_validation=validation, filtered=(len(kept), len(triggers))
    )
    writer.write("tuning_report.tsv", report)
    return 0


def cmd_ngrams(config: WorkbenchConfig, args, writer: OutputWriter) -> int:
    dictionary = config.dictionary()
    with open(args.transcripts, encoding="utf-8") as fh:
        lines = fh.readlines()
    grams = extract_ngrams(lines, args.n, dictionary)
    body_lines = ["label\tcount\tpronunciations"]
    for gram in grams:
        prons = ";".join(" ".join(p) for p in gram.prons)
        body_lines.append(f"{gram.label}\t{gram.count}\t{prons}")
    writer.write(f"ngrams_{args.n}.tsv", "\n".join(body_lines) + "\n")
    return 0


def cmd_blocklist(config: WorkbenchConfig, args, writer: OutputWriter) -> int:
    wake = config.wake_word(args.wake)
    blocked = build_blocklist(wake, config.dictionary())
    for label in sorted(blocked):
        print(label)
    return 0


def cmd_weights(config: WorkbenchConfig, args, writer: OutputWriter) -> int:
    if args.weights_action == "build":
        with open(args.scores, encoding="utf-8") as fh:
            scores = load_probe_scores(fh)
        table = build_weight_table(scores, config.wake_words())
        import io

        buffer = io.StringIO()
        store_weight_table(table, buffer)
        writer.write(args.table_name, buffer.getvalue())
        return 0
    # check
    with open(args.table, encoding="utf-8") as fh:
        table = load_weight_table(fh)
    print(
        "ok: {} deletion, {} insertion, {} substitution entries over {} rows".format(
            len(table.deletion), len(table.insertion),
            len(table.substitution), len(table.row_phones),
        )
    )
    return 0


def cmd_probe_plan(config: WorkbenchConfig, args, writer: OutputWriter) -> int:
    dictionary = config.dictionary()
    if args.phones:
        phones = args.phones
    else:
        phones = sorted({p for w in config.wake_words() for p in w.phones})
    lines = ["phone\tedit\ttarget\tword\tvoice"]
    for phone in phones:
        plan = sample_probe_words(
            dictionary, phone, args.n_words, config.seed, n_voices=args.n_voices
        )
        for row in plan_rows(plan, dictionary.inventory.symbols):
            lines.append("\t".join(str(part) for part in row))
    writer.write("probe_plan.tsv", "\n".join(lines) + "\n")
    return 0


def cmd_harness(config: WorkbenchConfig, args, writer: OutputWriter) -> int:
    with open(args.events, encoding="utf-8") as fh:
        events = harness_mod.parse_event_log(fh)
    with open(args.verification, encoding="utf-8") as fh:
        verifications = harness_mod.parse_verification_log(fh)
    with open(args.adjudication, encoding="utf-8") as fh:
        adjudications = harness_mod.parse_adjudication_log(fh)
    analyses = harness_mod.join_records(events, verifications, adjudications)
    summary = harness_mod.summarize(analyses)
    body = harness_mod.format_summary(summary)
    if config.media_lengths:
        window_lines = ["[windows]", "media\tspeaker\tprogress_s\tstart_s\tend_s"]
        for analysis in analyses:
            event = analysis.event
            length = config.media_lengths.get(event.media_id)
            if length is None:
                log.warning("no media length configured for %r", event.media_id)
                continue
            start, end = harness_mod.verification_window(event, length)
            window_lines.append(
                f"{event.media_id}\t{event.speaker_id}\t{_fmt(event.progress_s)}"
                f"\t{_fmt(start)}\t{_fmt(end)}"
            )
        body += "\n".join(window_lines) + "\n"
    writer.write("harness_summary.tsv", body)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing and dispatch.


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="triggercraft",
        description="Craft, rank, and analyze accidental wake-word triggers.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--out", help="override the config output directory")
    parser.add_argument(
        "--no-timestamp", action="store_true",
        help="omit the generation-time header from outputs",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rank = sub.add_parser("rank", help="rank candidates against a wake word")
    p_rank.add_argument("--wake", required=True, help="wake word id from the config")
    p_rank.add_argument(
        "--model", choices=("unweighted", "simple", "advanced"), default="simple"
    )
    p_rank.add_argument(
        "--source", choices=("dictionary", "transcripts"), default="dictionary"
    )
    p_rank.add_argument("--transcripts", help="transcript file for --source transcripts")
    p_rank.add_argument(
        "--ngram-sizes", type=_int_list, default=(1, 2, 3),
        help="comma-separated n-gram sizes (default 1,2,3)",
    )
    p_rank.add_argument("--workers", type=int, default=1)
    p_rank.set_defaults(func=cmd_rank)

    p_tune = sub.add_parser("tune", help="grid-search the scale factors")
    p_tune.add_argument("--triggers", required=True, help="trigger-label TSV file")
    p_tune.add_argument("--variant", choices=("simple", "advanced"), default="simple")
    p_tune.add_argument("--filter-threshold", type=int, default=500)
    p_tune.add_argument("--loocv", action="store_true", help="also cross-validate")
    p_tune.set_defaults(func=cmd_tune)

    p_ngrams = sub.add_parser("ngrams", help="extract n-gram candidates")
    p_ngrams.add_argument("--transcripts", required=True)
    p_ngrams.add_argument("--n", type=int, choices=(1, 2, 3), required=True)
    p_ngrams.set_defaults(func=cmd_ngrams)

    p_block = sub.add_parser("blocklist", help="print a wake word's blocklist")
    p_block.add_argument("--wake", required=True)
    p_block.set_defaults(func=cmd_blocklist)

    p_weights = sub.add_parser("weights", help="build or check weight tables")
    weights_sub = p_weights.add_subparsers(dest="weights_action", required=True)
    p_build = weights_sub.add_parser("build", help="estimate a table from probe scores")
    p_build.add_argument("--scores", required=True, help="probe-score TSV file")
    p_build.add_argument(
        "--table-name", default="weights.tsv", help="output file name (in --out)"
    )
    p_build.set_defaults(func=cmd_weights)
    p_check = weights_sub.add_parser("check", help="validate a stored table")
    p_check.add_argument("--table", required=True)
    p_check.set_defaults(func=cmd_weights)

    p_plan = sub.add_parser("probe-plan", help="emit probe cells for the scorer")
    p_plan.add_argument(
        "--phone", dest="phones", action="append",
        help="phone to probe (repeatable; default: all wake-word phones)",
    )
    p_plan.add_argument("--n-words", type=int, default=100)
    p_plan.add_argument("--n-voices", type=int, default=10)
    p_plan.set_defaults(func=cmd_probe_plan)

    p_harness = sub.add_parser("harness", help="summarize measurement logs")
    p_harness.add_argument("--events", required=True)
    p_harness.add_argument("--verification", required=True)
    p_harness.add_argument("--adjudication", required=True)
    p_harness.set_defaults(func=cmd_harness)

    return parser


def _int_list(raw: str) -> tuple[int, ...]:
    try:
        values = tuple(int(part) for part in raw.split(",") if part.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad integer list {raw!r}") from None
    if not values or any(v not in (1, 2, 3) for v in values):
        raise argparse.ArgumentTypeError("n-gram sizes must come from 1,2,3")
    return values


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; usage problems are exit 1 here,
        # --help stays 0.
        return 0 if exc.code == 0 else 1
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        config = load_config(args.config)
        if args.seed is not None:
            config.seed = args.seed
        if args.out is not None:
            config.out_dir = Path(args.out)
        writer = OutputWriter(config.out_dir, timestamp=not args.no_timestamp)
        return args.func(config, args, writer)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    except OSError as exc:
        log.error("%s", exc)
        return 2
    except TriggerCraftError as exc:
        log.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
