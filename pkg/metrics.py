"""
Per-task scores (solved, intent match, syntactic overlap, guidance calls)
and their aggregation into report files.
"""
import csv
import logging
import os
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from typing import List, Optional

import constants as const
from core import SynthError, values_equal
from helper import confidence95, mean_std
from program import parse_program, program_steps, replay

logger = logging.getLogger(__name__)

SUMMARY_HEADER = ['domain', 'category', 'solver', 'tasks', 'solved', 'seeds', 'accuracy_mean', 'accuracy_std',
	'accuracy_ci95', 'calls_mean', 'calls_std', 'gt_steps_mean', 'gt_steps_std']
TABLE_HEADER = ['domain', 'solver'] + list(const.CATEGORIES)
SCATTER_HEADER = ['task_id', 'solver', 'domain', 'category', 'x', 'y']
HIST_HEADER = ['domain', 'category', 'solver', 'calls', 'count']
QUADRANT_HEADER = ['domain', 'category', 'solver', 'high_intent_high_overlap', 'high_intent_low_overlap',
	'low_intent_high_overlap', 'low_intent_low_overlap']
POSITION_HEADER = ['domain', 'category', 'solver', 'position', 'count']

QUADRANT_THRESHOLD = 0.5

_SPACE = re.compile(r'\s+')


@dataclass(frozen=True)
class TaskResult:
	task_id: str
	solver: str
	domain: str
	category: str
	seed: int
	solved: bool
	intent_match: Optional[float]
	syntactic_overlap: Optional[float]
	transductive_calls: int
	steps: int
	gt_steps: int
	guidance_positions: tuple = ()


@dataclass
class SummaryRow:
	domain: str
	category: str
	solver: str
	tasks: int
	solved: int
	seeds: int
	accuracy_mean: float
	accuracy_std: float
	accuracy_ci95: float
	calls_mean: float
	calls_std: float
	gt_steps_mean: float
	gt_steps_std: float


@dataclass
class SummaryReport:
	rows: List[SummaryRow] = field(default_factory=list)

	def row(self, domain, category, solver):
		for r in self.rows:
			if (r.domain, r.category, r.solver) == (domain, category, solver):
				return r
		return None


def _clip(x):
	return min(1.0, max(0.0, x))


def intent_match(trace, task):
	"""
	Fraction of ground-truth steps whose outputs the position-aligned step of
	the final program reproduces on every example
	"""
	if trace.program is None or not task.gt_steps:
		return 0.0
	try:
		steps = replay(parse_program(task.domain, trace.program), task.spec)
	except SynthError as e:
		logger.warning('task %s: cannot replay %r: %s', task.id, trace.program, e)
		return 0.0
	hits = sum(1 for got, gt in zip(steps, task.gt_steps)
		if all(values_equal(a, b) for a, b in zip(got, gt.outputs)))
	return _clip(hits / len(task.gt_steps))


def _canonical(step):
	return _SPACE.sub('', step.render())


def syntactic_overlap(program, gt_program):
	"""
	Fraction of ground-truth steps whose canonical text equals the
	position-aligned step of program
	"""
	gt = program_steps(gt_program)
	hits = sum(1 for a, b in zip(program_steps(program), gt) if _canonical(a) == _canonical(b))
	return _clip(hits / len(gt))


def evaluate_trace(trace, task):
	x = y = None
	if trace.solved:
		x = intent_match(trace, task)
		y = syntactic_overlap(parse_program(task.domain, trace.program), task.ground_truth)
	return TaskResult(trace.task_id, trace.solver, trace.domain, trace.category, trace.seed, trace.solved, x, y,
		trace.transductive_calls, trace.steps, len(task.gt_steps), tuple(trace.guidance_positions))


def evaluate(traces, tasks):
	"""
	TaskResults for every trace; traces of unknown tasks are skipped with a warning
	"""
	by_id = {t.id: t for t in tasks}
	results = []
	for trace in traces:
		task = by_id.get(trace.task_id)
		if task is None:
			logger.warning('trace for unknown task %s skipped', trace.task_id)
			continue
		results.append(evaluate_trace(trace, task))
	return results


def end_to_end_accuracy(results):
	results = list(results)
	if not results:
		return 0.0
	return sum(1 for r in results if r.solved) / len(results)


def _groups(results):
	groups = defaultdict(list)
	for r in results:
		groups[(r.domain, r.category, r.solver)].append(r)
	return dict(sorted(groups.items(), key=lambda kv: _order(kv[0])))


def _order(key):
	domain, category, solver = key
	return (const.DOMAINS.index(domain) if domain in const.DOMAINS else len(const.DOMAINS),
		const.CATEGORIES.index(category) if category in const.CATEGORIES else len(const.CATEGORIES),
		const.SOLVERS.index(solver) if solver in const.SOLVERS else len(const.SOLVERS),
		key)


def guidance_stats(results):
	"""
	Per (domain, category, solver): mean and std of guidance calls, and of
	ground-truth decomposition lengths
	"""
	stats = {}
	for key, group in _groups(results).items():
		calls_mean, calls_std = mean_std([r.transductive_calls for r in group])
		gt_mean, gt_std = mean_std([r.gt_steps for r in group])
		stats[key] = {'calls_mean': calls_mean, 'calls_std': calls_std, 'gt_steps_mean': gt_mean,
			'gt_steps_std': gt_std, 'tasks': len(group)}
	return stats


def summarize(results):
	"""
	Accuracy statistics are taken over run seeds
	"""
	report = SummaryReport()
	calls = guidance_stats(results)
	for key, group in _groups(results).items():
		per_seed = defaultdict(list)
		for r in group:
			per_seed[r.seed].append(r)
		accuracies = [end_to_end_accuracy(rs) for _, rs in sorted(per_seed.items())]
		mean, std = mean_std(accuracies)
		c = calls[key]
		report.rows.append(SummaryRow(*key, len(group), sum(1 for r in group if r.solved), len(per_seed), mean, std,
			confidence95(accuracies), c['calls_mean'], c['calls_std'], c['gt_steps_mean'], c['gt_steps_std']))
	return report


def _write(path, header, rows):
	with open(path, 'w', newline='', encoding='utf-8') as f:
		writer = csv.writer(f, lineterminator='\n')
		writer.writerow(header)
		writer.writerows(rows)
	logger.info('wrote %s', path)
	return path


def _f(x):
	return '%.4f' % x


def export_report(results, out_dir):
	"""
	Writes summary.csv, table.csv, scatter.csv, guidance_hist.csv,
	quadrants.csv and guidance_position.csv into out_dir; returns their paths
	"""
	os.makedirs(out_dir, exist_ok=True)
	results = list(results)
	report = summarize(results)
	paths = []

	paths.append(_write(os.path.join(out_dir, 'summary.csv'), SUMMARY_HEADER, [
		[r.domain, r.category, r.solver, r.tasks, r.solved, r.seeds, _f(r.accuracy_mean), _f(r.accuracy_std),
			_f(r.accuracy_ci95), _f(r.calls_mean), _f(r.calls_std), _f(r.gt_steps_mean), _f(r.gt_steps_std)]
		for r in report.rows]))

	table = {}
	for r in report.rows:
		cells = table.setdefault((r.domain, r.solver), {})
		cells[r.category] = '%.2f ± %.2f' % (r.accuracy_mean, r.accuracy_std)
	paths.append(_write(os.path.join(out_dir, 'table.csv'), TABLE_HEADER, [
		[domain, solver] + [cells.get(c, '') for c in const.CATEGORIES]
		for (domain, solver), cells in table.items()]))

	solved = [r for r in results if r.solved]
	paths.append(_write(os.path.join(out_dir, 'scatter.csv'), SCATTER_HEADER, [
		[r.task_id, r.solver, r.domain, r.category, _f(r.intent_match), _f(r.syntactic_overlap)] for r in solved]))

	hist, quadrants, positions = [], [], []
	for key, group in _groups(results).items():
		for calls, count in sorted(Counter(r.transductive_calls for r in group).items()):
			hist.append(list(key) + [calls, count])
		q = Counter()
		for r in group:
			if r.solved:
				q[(r.intent_match >= QUADRANT_THRESHOLD, r.syntactic_overlap >= QUADRANT_THRESHOLD)] += 1
		quadrants.append(list(key) + [q[(True, True)], q[(True, False)], q[(False, True)], q[(False, False)]])
		for position, count in sorted(Counter(p for r in group for p in r.guidance_positions).items()):
			positions.append(list(key) + [position, count])
	paths.append(_write(os.path.join(out_dir, 'guidance_hist.csv'), HIST_HEADER, hist))
	paths.append(_write(os.path.join(out_dir, 'quadrants.csv'), QUADRANT_HEADER, quadrants))
	paths.append(_write(os.path.join(out_dir, 'guidance_position.csv'), POSITION_HEADER, positions))
	return paths
