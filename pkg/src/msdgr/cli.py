"""Command-line entry point: ``msdgr <command> ...``.

Exit codes: 0 success, 1 usage, 2 data error, 3 verification failure.
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import (config, container, gradcheck, imageio, matcher, metrics, occlusion, pipeline,
               synth, train)
from .errors import MSDGRError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_VERIFY = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_cfg(args):
    return config.load(getattr(args, "config", None), getattr(args, "set", None) or ())


# -- commands ----------------------------------------------------------------

def cmd_extract(cfg, manifest_path, out_path, weights=None):
    entries = pipeline.load_manifest(manifest_path)
    reps = pipeline.extract_dataset(cfg, entries, pipeline.make_pipeline(cfg, weights))
    pipeline.save_reps(out_path, reps, cfg["seed"])
    return reps


def cmd_match(reps_a, reps_b, mode, adj_sign, out, pairs_out=None, seed=0):
    """All-pairs scores. ``mode`` is static, dynamic or both."""
    if reps_a and reps_b:
        matcher.check_compatible(reps_a[0], reps_b[0])
    modes = ("static", "dynamic") if mode == "both" else (mode,)
    header = ["label_a", "label_b", "score", "genuine_flag", "index_a", "index_b"]
    if mode == "both":
        header += ["score_static", "score_dynamic"]
    pf = open(pairs_out, "w", newline="") if pairs_out else None
    try:
        if pf:
            pf.write(f"# seed={seed} adj_sign={adj_sign}\n")
            csv.writer(pf, lineterminator="\n").writerow(matcher.MATCH_CSV_HEADER)
        with open(out, "w", newline="") as fh:
            fh.write(f"# seed={seed} mode={mode} adj_sign={adj_sign}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for i, a in enumerate(reps_a):
                for j, b in enumerate(reps_b):
                    s = {m: float(matcher.match_score(a, b, m, adj_sign)) for m in modes}
                    main = s["dynamic"] if mode == "both" else s[mode]
                    row = [a.label, b.label, repr(main), int(a.label == b.label), i, j]
                    if mode == "both":
                        row += [repr(s["static"]), repr(s["dynamic"])]
                    w.writerow(row)
                    if pf:
                        matcher.write_match_csv(pf, matcher.dynamic_match(a, b, adj_sign),
                                                [g.scale_id for g in a.graphs],
                                                (f"{a.label}#{i}", f"{b.label}#{j}"),
                                                header=False)
    finally:
        if pf:
            pf.close()


def _header_seed(path):
    """Seed from a leading ``# seed=N ...`` comment, or None."""
    with open(path) as fh:
        first = fh.readline()
    if first.startswith("#"):
        for tok in first[1:].split():
            if tok.startswith("seed="):
                return int(tok[5:]) if tok[5:].lstrip("-").isdigit() else None
    return None


def cmd_evaluate(score_csv, out_dir, far_targets=(0.01, 0.001, 0.0001), column="score",
                 exclude_diagonal=False):
    rows = metrics.read_scores_csv(score_csv, column)
    seed = _header_seed(score_csv)
    if exclude_diagonal:
        rows = [r for r in rows if r.get("index_a") is None or r["index_a"] != r["index_b"]]
    scores = metrics.ScoreSet([r["score"] for r in rows if r["genuine_flag"]],
                              [r["score"] for r in rows if not r["genuine_flag"]])
    e, th = metrics.eer(scores)
    report = {"seed": seed, "eer": e, "eer_threshold": th, "n_genuine": int(scores.genuine.size),
              "n_imposter": int(scores.imposter.size), "frr_at_far": {}}
    for t in far_targets:
        r = metrics.frr_at_far(scores, t)
        report["frr_at_far"][repr(t)] = {"frr": r.frr, "threshold": r.threshold,
                                         "warning": r.warning}
    if rows and "index_a" in rows[0]:
        probes = sorted({int(r["index_a"]) for r in rows})
        gallery = sorted({int(r["index_b"]) for r in rows})
        S = np.full((len(probes), len(gallery)), -np.inf)
        pl, gl = {}, {}
        pi = {p: k for k, p in enumerate(probes)}
        gi = {g: k for k, g in enumerate(gallery)}
        for r in rows:
            a, b = int(r["index_a"]), int(r["index_b"])
            S[pi[a], gi[b]] = r["score"]
            pl[a], gl[b] = r["label_a"], r["label_b"]
        try:
            report["rank_n"] = {str(k): v for k, v in metrics.rank_n(
                S, [pl[p] for p in probes], [gl[g] for g in gallery]).items()}
        except MSDGRError as exc:
            report["rank_n_skipped"] = str(exc)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "det.csv"), "w", newline="") as fh:
        fh.write(f"# seed={seed}\n")
        metrics.write_det_csv(fh, metrics.det_curve(scores))
    with open(os.path.join(out_dir, "report.json"), "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _training_reps(cfg, source):
    if source.endswith(".msdg"):
        return pipeline.load_reps(source)[0]
    return pipeline.extract_dataset(cfg, pipeline.load_manifest(source))


def cmd_train_graph(cfg, source, weights_out, log_out=None, echo=None):
    reps = _training_reps(cfg, source)
    params, log = train.train(reps, cfg, on_epoch=echo)
    arrays = train.params_to_dict(params)
    arrays["meta/seed"] = container.encode_int(cfg["seed"])
    container.save(weights_out, arrays)
    if log_out:
        with open(log_out, "w", newline="") as fh:
            fh.write(f"# seed={cfg['seed']} initial_loss={log.initial_loss!r} "
                     f"final_loss={log.final_loss!r}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["epoch", "lr", "mean_loss"])
            for row in log.epochs:
                w.writerow([row[0], repr(row[1]), repr(row[2])])
    return params, log


def cmd_occlude(manifest_path, spec, out_dir, region_choice="fixed"):
    """Occlude every manifest image; region "random" draws one side per image."""
    entries = pipeline.load_manifest(manifest_path)
    os.makedirs(out_dir, exist_ok=True)
    rng = np.random.default_rng(spec.seed)
    out_entries = []
    for k, e in enumerate(entries):
        arr, maxval = imageio.read(e.path)
        region = spec.region
        if region == "random":
            region = occlusion.REGIONS[int(rng.integers(4))]
        s = occlusion.OcclusionSpec(spec.kind, spec.area_fraction, region, spec.fill,
                                    spec.seed + k)
        rec = occlusion.occlude(arr, s)
        stem = f"{k:05d}_{os.path.splitext(os.path.basename(e.path))[0]}"
        ext = ".ppm" if arr.ndim == 3 else ".pgm"
        img_path = os.path.join(out_dir, stem + ext)
        imageio.write(img_path, rec.image, maxval)
        imageio.write(os.path.join(out_dir, stem + "_mask.pgm"),
                      rec.mask.astype(np.uint8) * 255, 255)
        out_entries.append(pipeline.ManifestEntry(img_path, e.label, e.split))
    pipeline.write_manifest(os.path.join(out_dir, "manifest.csv"), out_entries)
    return out_entries


def cmd_synth(kind, out_dir, classes, per_class, seed, height=64, width=128, nuisance=8):
    os.makedirs(out_dir, exist_ok=True)
    if kind == "textures":
        images, labels = synth.texture_dataset(classes, per_class, height, width, seed=seed)
        entries = []
        for k, (img, lab) in enumerate(zip(images, labels)):
            p = os.path.join(out_dir, f"{lab}_{k:04d}.pgm")
            imageio.write_gray(p, img)
            entries.append(pipeline.ManifestEntry(p, lab))
        pipeline.write_manifest(os.path.join(out_dir, "manifest.csv"), entries)
        return os.path.join(out_dir, "manifest.csv")
    reps = synth.graph_dataset(classes, per_class, nuisance=nuisance, seed=seed)
    path = os.path.join(out_dir, "graphs.msdg")
    pipeline.save_reps(path, [pipeline.quantize(r) for r in reps], seed)
    return path


# -- argument parsing --------------------------------------------------------

def build_parser():
    p = _Parser(prog="msdgr", description="Multiscale dynamic graph matching toolkit")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(sp):
        sp.add_argument("--config", help="key = value config file")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable)")

    sp = sub.add_parser("extract", help="images -> representation file")
    with_config(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out", required=True)

    sp = sub.add_parser("match", help="score all pairs between two representation files")
    sp.add_argument("reps_a")
    sp.add_argument("reps_b")
    sp.add_argument("--mode", choices=("static", "dynamic", "both"), default="dynamic")
    sp.add_argument("--adj-sign", type=int, choices=(-1, 1), default=-1)
    sp.add_argument("--out", required=True)
    sp.add_argument("--pairs-out", help="per-node retained/removed dump (CSV)")

    sp = sub.add_parser("evaluate", help="EER, FRR@FAR, DET and rank-n from a score CSV")
    sp.add_argument("scores")
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--column", default="score")
    sp.add_argument("--far", default="0.01,0.001,0.0001")
    sp.add_argument("--exclude-diagonal", action="store_true",
                    help="drop rows comparing a sample with itself (index_a == index_b)")

    sp = sub.add_parser("train-graph", help="train graph blocks with the triplet loss")
    with_config(sp)
    sp.add_argument("--manifest", required=True, help="image manifest CSV or .msdg file")
    sp.add_argument("--out", required=True)
    sp.add_argument("--log")

    sp = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    sp.add_argument("--seed", type=int, default=int(os.environ.get("MSDGR_SEED", 0) or 0))
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--corrupt", help=argparse.SUPPRESS)

    sp = sub.add_parser("occlude", help="write an occluded copy of a dataset")
    with_config(sp)
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--out-dir", required=True)

    sp = sub.add_parser("synth", help="generate a synthetic dataset")
    sp.add_argument("kind", choices=("textures", "graphs"))
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--classes", type=int, default=20)
    sp.add_argument("--per-class", type=int, default=4)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--nuisance", type=int, default=8,
                    help="graphs only: trailing node channels holding pure noise")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "extract":
            cfg = _load_cfg(args)
            reps = cmd_extract(cfg, args.manifest, args.out)
            print(f"wrote {len(reps)} representations to {args.out} (seed={cfg['seed']})")
        elif args.command == "match":
            a, seed = pipeline.load_reps(args.reps_a)
            b, _ = pipeline.load_reps(args.reps_b)
            cmd_match(a, b, args.mode, args.adj_sign, args.out, args.pairs_out, seed)
            print(f"wrote {len(a) * len(b)} scores to {args.out}")
        elif args.command == "evaluate":
            targets = tuple(float(v) for v in args.far.split(",") if v)
            rep = cmd_evaluate(args.scores, args.out_dir, targets, args.column,
                               args.exclude_diagonal)
            print(json.dumps(rep, indent=2, sort_keys=True))
        elif args.command == "train-graph":
            cfg = _load_cfg(args)
            _, log = cmd_train_graph(cfg, args.manifest, args.out, args.log,
                                     echo=lambda e, lr, l: print(f"epoch {e:3d} lr {lr:.2e} "
                                                                 f"loss {l:.4f}"))
            print(f"mean triplet loss {log.initial_loss:.4f} -> {log.final_loss:.4f}")
        elif args.command == "gradcheck":
            report = gradcheck.run(args.seed, args.trials, args.corrupt)
            print("\n".join(report.lines()))
            return EXIT_OK if report.passed else EXIT_VERIFY
        elif args.command == "occlude":
            cfg = _load_cfg(args)
            spec = occlusion.OcclusionSpec(cfg["occlusion.kind"], cfg["occlusion.area_fraction"],
                                           cfg["occlusion.region"], cfg["occlusion.fill"],
                                           cfg["seed"])
            out = cmd_occlude(args.manifest, spec, args.out_dir)
            print(f"wrote {len(out)} occluded images to {args.out_dir}")
        elif args.command == "synth":
            path = cmd_synth(args.kind, args.out_dir, args.classes, args.per_class, args.seed,
                             nuisance=args.nuisance)
            print(f"wrote {path}")
    except (MSDGRError, OSError) as exc:
        print(f"msdgr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
