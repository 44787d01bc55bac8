"""
Command-line entry point.

	python run.py gen --domain string --category all --count 1000 --out data
	python run.py solve --tasks data/string_length_generalization_test.jsonl --solver tiips --out traces.jsonl
	python run.py report traces.jsonl --tasks data/string_length_generalization_test.jsonl --out report

Exit status: 0 success, 1 usage, 2 runtime failure.
"""
import argparse
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional

from tqdm import tqdm

import constants as const
from benchgen import generate_split, read_dataset, write_dataset, write_triples
from core import SynthError
from engine import Budget, SolverConfig, read_traces, run_batch
from metrics import end_to_end_accuracy, evaluate, export_report

logger = logging.getLogger(__name__)


class UsageError(Exception):
	pass


class _Parser(argparse.ArgumentParser):

	def error(self, message):
		self.print_usage(sys.stderr)
		self.exit(1, '%s: error: %s\n' % (self.prog, message))


@dataclass
class RunConfig:
	domain: str = 'string'
	categories: List[str] = field(default_factory=lambda: ['all'])
	solver: str = 'tiips'
	inductive: str = 'builtin'
	transductive: str = 'oracle'
	inner_k: int = const.INNER_K
	outer_t: int = const.OUTER_T
	step_limit: int = const.STEP_LIMIT
	beam: int = const.BEAM
	wall_clock_cap: Optional[float] = None
	node_cap: int = const.NODE_CAP
	timeout: float = const.ADAPTER_TIMEOUT
	seed: int = 0
	count: int = 1000
	train_count: int = 1000
	jobs: int = 1
	tasks: List[str] = field(default_factory=list)
	traces: List[str] = field(default_factory=list)
	out: Optional[str] = None
	resume: bool = False
	triples: bool = False

	def validate(self):
		if self.domain not in const.DOMAINS:
			raise UsageError('unknown domain %r (choose from %s)' % (self.domain, ', '.join(const.DOMAINS)))
		self.categories = expand_categories(self.categories)
		for name in ('count', 'train_count'):
			if getattr(self, name) < 0:
				raise UsageError('%s must not be negative' % name)
		if self.jobs < 1:
			raise UsageError('jobs must be at least 1')
		try:
			self.solver_config()
		except ValueError as e:
			raise UsageError(str(e)) from None
		return self

	def budget(self):
		return Budget(self.inner_k, self.outer_t, self.step_limit, self.beam, self.wall_clock_cap)

	def solver_config(self):
		return SolverConfig(self.solver, self.budget(), self.inductive, self.transductive, self.seed,
			self.node_cap, self.timeout)


def expand_categories(names):
	"""
	'all' stands for the five generalization categories; names may be comma separated
	"""
	expanded = []
	if isinstance(names, str):
		names = [names]
	for name in names:
		for part in name.split(','):
			part = part.strip()
			chosen = const.GENERALIZATION_CATEGORIES if part == 'all' else (part,)
			for c in chosen:
				if c not in const.CATEGORIES:
					raise UsageError('unknown category %r (choose from all, %s)' % (c, ', '.join(const.CATEGORIES)))
				if c not in expanded:
					expanded.append(c)
	return expanded


def load_config(path, overrides):
	"""
	Defaults, then the JSON config file, then explicitly given flags
	"""
	values = asdict(RunConfig())
	if path:
		try:
			with open(path, encoding='utf-8') as f:
				loaded = json.load(f)
		except (OSError, json.JSONDecodeError) as e:
			raise UsageError('cannot read config %s: %s' % (path, e)) from None
		if not isinstance(loaded, dict):
			raise UsageError('config %s must hold an object' % path)
		known = {f.name for f in fields(RunConfig)}
		unknown = sorted(set(loaded) - known)
		if unknown:
			raise UsageError('unknown config key %r in %s' % (unknown[0], path))
		values.update(loaded)
	values.update({k: v for k, v in overrides.items() if v is not None})
	try:
		return RunConfig(**values).validate()
	except (TypeError, ValueError) as e:
		raise UsageError(str(e)) from None


def dataset_path(out_dir, domain, category, split):
	return os.path.join(out_dir, '%s_%s_%s.jsonl' % (domain, category, split))


def cmd_gen(config):
	out_dir = config.out or 'data'
	os.makedirs(out_dir, exist_ok=True)
	for category in config.categories:
		for split, count in (('train', config.train_count), ('test', config.count)):
			tasks = generate_split(config.domain, category, split, count, config.seed,
				progress=lambda it: tqdm(it, desc='%s %s %s' % (config.domain, category, split), leave=False))
			path = dataset_path(out_dir, config.domain, category, split)
			write_dataset(tasks, path)
			print('%s %s %s: %d tasks -> %s' % (config.domain, category, split, len(tasks), path))
			if config.triples and split == 'train':
				triples_path = os.path.join(out_dir, '%s_%s_triples.jsonl' % (config.domain, category))
				print('%s %s train: %d triples -> %s' % (config.domain, category,
					write_triples(tasks, triples_path), triples_path))
	return 0


def _task_files(config):
	if not config.tasks:
		raise UsageError('--tasks is required')
	for path in config.tasks:
		if not os.path.exists(path):
			raise UsageError('task file %s does not exist' % path)
	tasks = []
	for path in config.tasks:
		tasks.extend(read_dataset(path))
	return tasks


def cmd_solve(config):
	tasks = _task_files(config)
	out = config.out or 'traces.jsonl'
	solved = [0, 0]

	def progress(results, total):
		bar = tqdm(results, total=total, desc=config.solver)
		for trace in bar:
			solved[0] += trace.solved
			solved[1] += 1
			bar.set_postfix(accuracy='%.3f' % (solved[0] / solved[1]))
			yield trace

	traces = run_batch(tasks, config.solver_config(), config.jobs, out, config.resume, progress)
	accuracy = sum(1 for t in traces if t.solved) / len(traces) if traces else 0.0
	print('%s: %d/%d solved, accuracy %.4f -> %s' % (config.solver, sum(1 for t in traces if t.solved),
		len(traces), accuracy, out))
	return 0


def cmd_report(config):
	if not config.traces:
		raise UsageError('at least one trace file is required')
	for path in config.traces:
		if not os.path.exists(path):
			raise UsageError('trace file %s does not exist' % path)
	tasks = _task_files(config)
	traces = []
	for path in config.traces:
		traces.extend(read_traces(path))
	results = evaluate(traces, tasks)
	paths = export_report(results, config.out or 'report')
	for solver in sorted({r.solver for r in results}):
		print('%s: accuracy %.4f over %d tasks' % (solver,
			end_to_end_accuracy(r for r in results if r.solver == solver),
			sum(1 for r in results if r.solver == solver)))
	for path in paths:
		print('wrote %s' % path)
	return 0


def _parser():
	parser = _Parser(prog='run.py', description='Step-wise program synthesis experiments')
	parser.add_argument('-v', '--verbose', action='store_true', help='per-step solver detail')
	parser.add_argument('-q', '--quiet', action='store_true', help='warnings only')
	sub = parser.add_subparsers(dest='command', parser_class=_Parser)
	sub.required = True

	def common(p):
		p.add_argument('--config', help='JSON file of RunConfig fields; flags win')
		p.add_argument('--seed', type=int)
		p.add_argument('--out')

	gen = sub.add_parser('gen', help='generate train and test task files')
	common(gen)
	gen.add_argument('--domain', choices=const.DOMAINS)
	gen.add_argument('--category', dest='categories', action='append')
	gen.add_argument('--count', type=int, help='test tasks per category')
	gen.add_argument('--train-count', type=int)
	gen.add_argument('--triples', action='store_true', default=None, help='also export training triples')

	solve = sub.add_parser('solve', help='run a solver over task files')
	common(solve)
	solve.add_argument('--tasks', action='append')
	solve.add_argument('--solver', choices=const.SOLVERS)
	solve.add_argument('--inductive', help='builtin | external:<command>')
	solve.add_argument('--transductive', help='oracle | heuristic | none | external:<command>')
	solve.add_argument('--inner-k', type=int)
	solve.add_argument('--outer-t', type=int)
	solve.add_argument('--step-limit', type=int)
	solve.add_argument('--beam', type=int)
	solve.add_argument('--wall-clock-cap', type=float)
	solve.add_argument('--node-cap', type=int)
	solve.add_argument('--timeout', type=float, help='seconds per external model request')
	solve.add_argument('--jobs', type=int)
	solve.add_argument('--resume', action='store_true', default=None)

	report = sub.add_parser('report', help='score traces and export report files')
	common(report)
	report.add_argument('traces', nargs='+')
	report.add_argument('--tasks', action='append')
	return parser


COMMANDS = {'gen': cmd_gen, 'solve': cmd_solve, 'report': cmd_report}


def main(argv=None):
	args = vars(_parser().parse_args(argv))
	verbose, quiet = args.pop('verbose'), args.pop('quiet')
	logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO,
		format='%(asctime)s %(name)s %(levelname)s %(message)s')
	command = args.pop('command')
	try:
		config = load_config(args.pop('config'), args)
		return COMMANDS[command](config)
	except UsageError as e:
		print('run.py %s: error: %s' % (command, e), file=sys.stderr)
		return 1
	except (SynthError, OSError) as e:
		print('run.py %s: %s' % (command, e), file=sys.stderr)
		return 2


if __name__ == '__main__':
	sys.exit(main())
