"""
Command-line entry point
========================
Subcommands:
- recommend: fingerprint file -> metric plan (plan.json + rationale)
- evaluate:  run config -> report.json + curve tables
- toybench:  closed-form roots benchmark for both synthetic predictors

Exit codes: 0 success, 1 runtime error, 2 input error.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from typing import List, Optional

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from config import LOG_FORMAT, LOG_LEVEL, RESULTS_DIR

try:
    from .config import TOOL_VERSION, TOYBENCH_CONFIG
    from .core import Fingerprint, ValidationToolkitError, all_fingerprints, load_dataset
    from .models import recommend
    from .reporting import summary_table, write_report
    from .run_config import load_run_config, parse_sweep
    from .toybench import run_toy_benchmark
    from .validation_utils import PosteriorValidator
except ImportError:
    from posterior_validation.config import TOOL_VERSION, TOYBENCH_CONFIG
    from posterior_validation.core import Fingerprint, ValidationToolkitError, all_fingerprints, load_dataset
    from posterior_validation.models import recommend
    from posterior_validation.reporting import summary_table, write_report
    from posterior_validation.run_config import load_run_config, parse_sweep
    from posterior_validation.toybench import run_toy_benchmark
    from posterior_validation.validation_utils import PosteriorValidator

logger = logging.getLogger(__name__)


def _write_json(data, path: str):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', encoding='utf-8') as handle:
        json.dump(data, handle, sort_keys=True, indent=2)
        handle.write('\n')


def _load_fingerprint(path: str) -> Fingerprint:
    if not os.path.exists(path):
        raise FileNotFoundError(f'fingerprint file not found: {path}')
    with open(path, 'r', encoding='utf-8') as handle:
        data = json.load(handle)
    # a run config carries the fingerprint under its own key
    if isinstance(data, dict) and 'fingerprint' in data:
        data = data['fingerprint']
    return Fingerprint.from_dict(data)


# =============================================================================
# SUBCOMMANDS
# =============================================================================
def cmd_recommend(args) -> int:
    out_dir = args.out or RESULTS_DIR
    if args.all:
        plans = []
        for fp in all_fingerprints():
            plan = recommend(fp, args.high_dimensional, args.sweep_declared)
            plans.append({'fingerprint': fp.to_dict(), 'plan': plan.to_dict()})
        path = os.path.join(out_dir, 'plans.json')
        _write_json(plans, path)
        print(f'{len(plans)} plans written to {path}')
        return 0

    if not args.fingerprint:
        raise ValidationToolkitError('recommend needs a fingerprint file or --all')
    fp = _load_fingerprint(args.fingerprint)
    plan = recommend(fp, args.high_dimensional, args.sweep_declared)
    path = os.path.join(out_dir, 'plan.json')
    _write_json({'fingerprint': fp.to_dict(), 'plan': plan.to_dict()}, path)
    print(plan.rationale())
    print(f'\nPlan written to {path}')
    return 0


def cmd_evaluate(args) -> int:
    config = load_run_config(args.config)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    if config.dataset is None:
        raise ValidationToolkitError('run config has no dataset')
    cases = load_dataset(config.dataset)
    report = PosteriorValidator(config).evaluate(cases)
    out_dir = args.out or config.output_dir or RESULTS_DIR
    paths = write_report(report, out_dir)
    print(summary_table(report).to_string(index=False))
    print(f"\nReport written to {paths['report']}")
    return 0


def cmd_toybench(args) -> int:
    sweep = parse_sweep(args.sweep) if args.sweep else None
    out_dir = args.out or os.path.join(RESULTS_DIR, 'toybench')
    reports = run_toy_benchmark(
        num_cases=args.cases,
        seed=args.seed,
        threshold=args.threshold,
        resimulation=args.resimulation == 'on',
        sweep=sweep,
        out_dir=out_dir,
    )
    for predictor, report in reports.items():
        print(f'== {predictor} ==')
        print(summary_table(report).to_string(index=False))
        print()
    print(f'Artifacts written to {out_dir}')
    return 0


# =============================================================================
# PARSER
# =============================================================================
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='posterior-validation',
                                     description='Mode-centric validation of posterior predictions')
    parser.add_argument('--version', action='version', version=f'%(prog)s {TOOL_VERSION}')
    parser.add_argument('-v', '--verbose', action='store_true', help='log progress at INFO level')
    sub = parser.add_subparsers(dest='command', required=True)

    rec = sub.add_parser('recommend', help='recommend metrics for a problem fingerprint')
    rec.add_argument('fingerprint', nargs='?', help='fingerprint JSON file (or a run config)')
    rec.add_argument('--all', action='store_true', help='write plans for all 256 fingerprints')
    rec.add_argument('--high-dimensional', action='store_true', help='rule out discretized KL')
    rec.add_argument('--sweep-declared', action='store_true', help='offer Metric@Target')
    rec.add_argument('--out', help='output directory')
    rec.set_defaults(handler=cmd_recommend)

    ev = sub.add_parser('evaluate', help='evaluate a case file with a run config')
    ev.add_argument('--config', required=True, help='run config JSON file')
    ev.add_argument('--seed', type=int, help='override the run config seed')
    ev.add_argument('--out', help='output directory')
    ev.set_defaults(handler=cmd_evaluate)

    toy = sub.add_parser('toybench', help='run the closed-form roots benchmark')
    toy.add_argument('--cases', type=int, default=TOYBENCH_CONFIG['num_cases'])
    toy.add_argument('--seed', type=int, default=TOYBENCH_CONFIG['seed'])
    toy.add_argument('--threshold', type=float, default=TOYBENCH_CONFIG['threshold'])
    toy.add_argument('--sweep', help='name=a..b, name=a..b:k or name=v1,v2 (min_samples, eps, alpha, threshold)')
    toy.add_argument('--resimulation', choices=('on', 'off'), default='off')
    toy.add_argument('--out', help='output directory')
    toy.set_defaults(handler=cmd_toybench)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else LOG_LEVEL, format=LOG_FORMAT)
    try:
        return args.handler(args)
    except (ValidationToolkitError, json.JSONDecodeError, FileNotFoundError) as e:
        logger.error(f'{type(e).__name__}: {e}')
        print(f'error: {e}', file=sys.stderr)
        return 2
    except Exception as e:
        logger.exception('run failed')
        print(f'error: {e}', file=sys.stderr)
        return 1


if __name__ == '__main__':
    sys.exit(main())
