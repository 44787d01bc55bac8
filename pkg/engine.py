"""
Solver loops over a spec: TIIPS (inductive inner loop with sparse subgoal
guidance), ExeDec (guidance before every step) and the inductive-only
baseline. Every attempt is recorded in a SolveTrace.
"""
import enum
import logging
import multiprocessing
import os
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import constants as const
from adapter import ModelSession
from core import BudgetExhausted, ParseError, SynthError, values_equal
from helper import drop_partial_line, dump_line, encode_spec, encode_value, read_records
from inductive import EnumerativeModel, ExternalInductiveModel
from program import combine, execute_step, is_solved, update_task, verify
from transductive import (ExternalTransductiveModel, HeuristicTransductiveModel, OracleTransductiveModel,
	build_subtask)

logger = logging.getLogger(__name__)

__all__ = ['Budget', 'Outcome', 'AttemptRecord', 'SolveTrace', 'SolverConfig', 'combine', 'solve_tiips',
	'solve_exedec', 'solve_baseline', 'solve_task', 'run_batch', 'read_traces', 'write_traces']

_TRACE_FIELDS = ('task_id', 'solver', 'domain', 'category', 'seed', 'outcome', 'program', 'steps',
	'transductive_calls', 'guidance', 'attempts', 'detail')
_ATTEMPT_FIELDS = ('outer', 'inner', 'guided', 'subgoal', 'subprogram', 'outputs', 'state')


class Outcome(enum.Enum):
	SOLVED = 'Solved'
	UNSOLVED = 'Unsolved'
	ERROR = 'Error'


@dataclass(frozen=True)
class Budget:
	inner_k: int = const.INNER_K
	outer_t: int = const.OUTER_T
	step_limit: int = const.STEP_LIMIT
	beam: int = const.BEAM
	wall_clock_cap: Optional[float] = None

	def __post_init__(self):
		for name in ('inner_k', 'outer_t', 'step_limit', 'beam'):
			value = getattr(self, name)
			if isinstance(value, bool) or not isinstance(value, int) or value < 1:
				raise ValueError('%s must be a positive integer, got %r' % (name, value))
		if self.wall_clock_cap is not None and self.wall_clock_cap <= 0:
			raise ValueError('wall_clock_cap must be positive, got %r' % (self.wall_clock_cap,))


@dataclass(frozen=True)
class AttemptRecord:
	outer: int
	inner: int
	guided: bool
	subgoal: Optional[Tuple]
	subprogram: str
	outputs: Tuple
	state: dict

	def to_record(self):
		return {
			'outer': self.outer,
			'inner': self.inner,
			'guided': self.guided,
			'subgoal': None if self.subgoal is None else [encode_value(v) for v in self.subgoal],
			'subprogram': self.subprogram,
			'outputs': [encode_value(v) for v in self.outputs],
			'state': self.state,
		}

	@classmethod
	def from_record(cls, record):
		if not isinstance(record, dict) or sorted(record) != sorted(_ATTEMPT_FIELDS):
			raise ParseError('attempt records carry exactly %s' % ', '.join(_ATTEMPT_FIELDS))
		subgoal = record['subgoal']
		return cls(record['outer'], record['inner'], record['guided'],
			None if subgoal is None else tuple(_plain(v) for v in subgoal),
			record['subprogram'], tuple(_plain(v) for v in record['outputs']), record['state'])


def _plain(raw):
	return tuple(raw) if isinstance(raw, list) else raw


@dataclass(frozen=True)
class SolveTrace:
	solver: str
	domain: str
	outcome: Outcome
	program: Optional[str]
	steps: int
	guidance: Tuple[dict, ...] = ()
	attempts: Tuple[AttemptRecord, ...] = ()
	detail: str = ''
	task_id: str = ''
	category: str = ''
	seed: int = 0

	@property
	def transductive_calls(self):
		return len(self.guidance)

	@property
	def guidance_positions(self):
		return [g['position'] for g in self.guidance]

	@property
	def solved(self):
		return self.outcome is Outcome.SOLVED

	def to_record(self):
		return {
			'task_id': self.task_id,
			'solver': self.solver,
			'domain': self.domain,
			'category': self.category,
			'seed': self.seed,
			'outcome': self.outcome.value,
			'program': self.program,
			'steps': self.steps,
			'transductive_calls': self.transductive_calls,
			'guidance': list(self.guidance),
			'attempts': [a.to_record() for a in self.attempts],
			'detail': self.detail,
		}

	@classmethod
	def from_record(cls, record):
		try:
			outcome = Outcome(record['outcome'])
		except ValueError:
			raise ParseError('unknown outcome %r' % (record['outcome'],)) from None
		if record['solver'] not in const.SOLVERS:
			raise ParseError('unknown solver %r' % (record['solver'],))
		if record['domain'] not in const.DOMAINS:
			raise ParseError('unknown domain %r' % (record['domain'],))
		if not isinstance(record['guidance'], list) or not isinstance(record['attempts'], list):
			raise ParseError('guidance and attempts must be lists')
		for g in record['guidance']:
			if not isinstance(g, dict) or sorted(g) != ['outer', 'position', 'prediction']:
				raise ParseError('guidance records carry exactly outer, position, prediction')
		trace = cls(record['solver'], record['domain'], outcome, record['program'], record['steps'],
			tuple(record['guidance']), tuple(AttemptRecord.from_record(a) for a in record['attempts']),
			record['detail'], record['task_id'], record['category'], record['seed'])
		if record['transductive_calls'] != trace.transductive_calls:
			raise ParseError('transductive_calls %r does not match %d guidance records'
				% (record['transductive_calls'], trace.transductive_calls))
		return trace


class _Run:
	"""
	Bookkeeping of one solve: attempts, guidance calls, faults and the clock
	"""

	def __init__(self, solver, spec, inductive, budget):
		self.solver = solver
		self.spec = spec
		self.inductive = inductive
		self.budget = budget
		self.attempts = []
		self.guidance = []
		self.faulted = False
		self.longest = 0
		self._start = time.monotonic()

	def timed_out(self):
		cap = self.budget.wall_clock_cap
		return cap is not None and time.monotonic() - self._start > cap

	def propose(self, spec):
		try:
			return self.inductive.propose(spec, self.budget.beam)
		except BudgetExhausted as e:
			logger.debug('%s: no proposals (%s)', self.solver, e.detail)
			return []

	def take(self, state, candidates, position, target=None):
		"""
		First candidate that executes on state and whose update succeeds.
		With a target, candidates reproducing it exactly come first.
		Returns (ast, outputs, next state or None when solved) or None
		"""
		faults, usable = 0, []
		for cand in candidates:
			try:
				outputs = execute_step(state, cand.ast)
			except SynthError as e:
				faults += 1
				logger.debug('candidate %s faults: %s', cand.render(), e)
				continue
			solved = is_solved(state, outputs)
			try:
				nxt = None if solved else update_task(state, outputs, position)
			except SynthError as e:
				logger.debug('candidate %s is inconsistent: %s', cand.render(), e)
				continue
			taken = (cand.ast, outputs, nxt)
			if target is None or all(values_equal(o, t) for o, t in zip(outputs, target)):
				return taken
			usable.append(taken)
		if candidates and faults == len(candidates):
			self.faulted = True
		return usable[0] if usable else None

	def record(self, outer, inner, guided, subgoal, ast, outputs, state):
		logger.debug('%s t=%d k=%d%s: %s -> %r', self.solver, outer, inner, ' guided' if guided else '',
			ast.render(), outputs)
		self.attempts.append(AttemptRecord(outer, inner, guided, subgoal, ast.render(), tuple(outputs),
			encode_spec(state)))

	def inner_loop(self, outer, state, prefix, k):
		"""
		Greedy inductive steps from state for up to k steps; returns the
		combined program when the state is solved
		"""
		steps = list(prefix)
		for inner in range(k):
			if len(steps) >= self.budget.step_limit or self.timed_out():
				break
			taken = self.take(state, self.propose(state), len(steps))
			if taken is None:
				break
			ast, outputs, nxt = taken
			self.record(outer, inner, False, None, ast, outputs, state)
			steps.append(ast)
			self.longest = max(self.longest, len(steps))
			if nxt is None:
				return self.combine(steps)
			state = nxt
		return None

	def guide(self, outer, state, position, model):
		predictions = model.predict_subgoals(state, self.budget.beam)
		self.guidance.append({'outer': outer, 'position': position,
			'prediction': [encode_value(v) for v in predictions[0].outputs] if predictions else None})
		logger.debug('%s t=%d: guidance at step %d gave %d predictions', self.solver, outer, position,
			len(predictions))
		return predictions

	def guided_step(self, outer, state, prediction, position):
		try:
			subtask = build_subtask(state, prediction)
		except SynthError as e:
			logger.debug('unusable prediction %r: %s', prediction.outputs, e)
			return None
		taken = self.take(state, self.propose(subtask), position, target=prediction.outputs)
		if taken is not None:
			ast, outputs, _ = taken
			self.record(outer, 0, True, prediction.outputs, ast, outputs, state)
		return taken

	def combine(self, steps):
		return combine(steps, len(self.spec.examples[0].inputs))

	def finish(self, program=None, detail=''):
		if program is not None and not verify(program, self.spec):
			logger.warning('%s: combined program %s does not verify', self.solver, program)
			program, detail = None, 'combined program does not verify'
		if program is not None:
			outcome = Outcome.SOLVED
		elif self.faulted:
			outcome, detail = Outcome.ERROR, detail or 'every candidate faulted at some step'
		else:
			outcome = Outcome.UNSOLVED
		steps = len(program) if program is not None else self.longest
		return SolveTrace(self.solver, self.spec.domain.value, outcome,
			None if program is None else str(program), steps, tuple(self.guidance), tuple(self.attempts), detail)


def solve_tiips(spec, inductive, transductive, budget=Budget()):
	"""
	Inductive inner loop of up to K steps from the outer state; when it
	fails, one guidance call fixes the next step of the outer state and the
	inner loop restarts from there. At most T outer iterations
	"""
	run = _Run('tiips', spec, inductive, budget)
	state, prefix = spec, []
	stale = False
	for t in range(budget.outer_t):
		if not stale:
			program = run.inner_loop(t, state, prefix, budget.inner_k)
			if program is not None:
				return run.finish(program)
		if run.timed_out():
			return run.finish(detail='wall clock')
		if t == budget.outer_t - 1 or len(prefix) >= budget.step_limit:
			break
		predictions = run.guide(t, state, len(prefix), transductive)
		if not predictions:
			break
		# rank min(t, beam) - 1, t counted from 1
		prediction = predictions[min(t + 1, len(predictions)) - 1]
		taken = run.guided_step(t, state, prediction, len(prefix))
		if taken is None:
			stale = True
			continue
		ast, _, nxt = taken
		prefix.append(ast)
		run.longest = max(run.longest, len(prefix))
		if nxt is None:
			return run.finish(run.combine(prefix))
		state, stale = nxt, False
	return run.finish()


def solve_exedec(spec, inductive, transductive, budget=Budget()):
	"""
	One guidance call before every step; predictions are tried in rank
	order until one yields a consistent subprogram
	"""
	run = _Run('exedec', spec, inductive, budget)
	state, prefix = spec, []
	for position in range(budget.step_limit):
		if run.timed_out():
			return run.finish(detail='wall clock')
		taken = None
		for prediction in run.guide(position, state, position, transductive):
			taken = run.guided_step(position, state, prediction, position)
			if taken is not None:
				break
		if taken is None:
			break
		ast, _, nxt = taken
		prefix.append(ast)
		run.longest = len(prefix)
		if nxt is None:
			return run.finish(run.combine(prefix))
		state = nxt
	return run.finish()


def solve_baseline(spec, inductive, budget=Budget()):
	run = _Run('baseline', spec, inductive, budget)
	program = run.inner_loop(0, spec, [], min(budget.inner_k, budget.step_limit))
	if program is None and run.timed_out():
		return run.finish(detail='wall clock')
	return run.finish(program)


@dataclass(frozen=True)
class SolverConfig:
	"""
	What run_batch needs to build models and solve: the solver tag, the
	budget and the model bindings (builtin | external:<cmd>, and
	oracle | heuristic | none | external:<cmd>)
	"""
	solver: str = 'tiips'
	budget: Budget = field(default_factory=Budget)
	inductive: str = 'builtin'
	transductive: str = 'oracle'
	seed: int = 0
	node_cap: int = const.NODE_CAP
	timeout: float = const.ADAPTER_TIMEOUT

	def __post_init__(self):
		if self.solver not in const.SOLVERS:
			raise ValueError('unknown solver %r' % (self.solver,))
		if self.inductive != 'builtin' and not self.inductive.startswith('external:'):
			raise ValueError('inductive model must be builtin or external:<command>, got %r' % (self.inductive,))
		if self.transductive not in ('oracle', 'heuristic', 'none') and not self.transductive.startswith('external:'):
			raise ValueError('transductive model must be oracle, heuristic, none or external:<command>, got %r'
				% (self.transductive,))
		if self.solver != 'baseline' and self.transductive == 'none':
			raise ValueError('%s needs a transductive model' % self.solver)


class _Models:
	"""
	Model instances owned by one worker
	"""

	def __init__(self, config):
		self.config = config
		if config.inductive == 'builtin':
			self.inductive = EnumerativeModel(config.node_cap)
		else:
			self.inductive = ExternalInductiveModel(ModelSession(config.inductive[len('external:'):], config.timeout))
		self.transductive = None
		if config.transductive == 'heuristic':
			self.transductive = HeuristicTransductiveModel()
		elif config.transductive.startswith('external:'):
			self.transductive = ExternalTransductiveModel(
				ModelSession(config.transductive[len('external:'):], config.timeout))

	def solve(self, task):
		config = self.config
		transductive = OracleTransductiveModel(task) if config.transductive == 'oracle' else self.transductive
		try:
			if config.solver == 'tiips':
				trace = solve_tiips(task.spec, self.inductive, transductive, config.budget)
			elif config.solver == 'exedec':
				trace = solve_exedec(task.spec, self.inductive, transductive, config.budget)
			else:
				trace = solve_baseline(task.spec, self.inductive, config.budget)
		except SynthError as e:
			logger.warning('task %s: %s', task.id, e)
			trace = SolveTrace(config.solver, task.domain.value, Outcome.ERROR, None, 0, detail=str(e))
		return replace(trace, task_id=task.id, category=task.category, seed=config.seed)

	def close(self):
		self.inductive.close()
		if self.transductive is not None:
			self.transductive.close()


def solve_task(task, config):
	models = _Models(config)
	try:
		return models.solve(task)
	finally:
		models.close()


_worker = None


def _init_worker(config):
	global _worker
	_worker = _Models(config)


def _solve_in_worker(task):
	return _worker.solve(task)


def run_batch(tasks, config, parallelism=1, out_path=None, resume=False, progress=None):
	"""
	Solves every task; traces are appended to out_path as they complete, in
	task order. With resume, tasks already traced in out_path are skipped and
	an unfinished last line left by a killed run is dropped first.
	Returns all traces in task order
	"""
	done = {}
	if resume and out_path and os.path.exists(out_path):
		drop_partial_line(out_path)
		done = {t.task_id: t for t in read_traces(out_path)}
		logger.info('resuming: %d of %d tasks already traced', len(done), len(tasks))
	todo = [t for t in tasks if t.id not in done]
	fresh = {}
	out = open(out_path, 'a' if resume else 'w', encoding='utf-8') if out_path else None
	try:
		if parallelism <= 1:
			models = _Models(config)
			try:
				results = (models.solve(t) for t in todo)
				fresh = _drain(results, out, progress, len(todo))
			finally:
				models.close()
		else:
			with multiprocessing.Pool(parallelism, initializer=_init_worker, initargs=(config,)) as pool:
				fresh = _drain(pool.imap(_solve_in_worker, todo), out, progress, len(todo))
	finally:
		if out is not None:
			out.close()
	return [done.get(t.id) or fresh[t.id] for t in tasks]


def _drain(results, out, progress, total):
	traces = {}
	if progress is not None:
		results = progress(results, total=total)
	for trace in results:
		traces[trace.task_id] = trace
		if out is not None:
			out.write(dump_line(trace.to_record()))
			out.flush()
	return traces


def write_traces(traces, path):
	with open(path, 'w', encoding='utf-8') as f:
		for trace in traces:
			f.write(dump_line(trace.to_record()))


def read_traces(path):
	traces = []
	for number, record in read_records(path, _TRACE_FIELDS):
		try:
			traces.append(SolveTrace.from_record(record))
		except SynthError as e:
			raise ParseError('%s:%d: %s' % (path, number, e.detail), line=number) from None
		except (TypeError, AttributeError) as e:
			raise ParseError('%s:%d: malformed trace (%s)' % (path, number, e), line=number) from None
	return traces
