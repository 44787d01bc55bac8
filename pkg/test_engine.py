import json
import os
import sys

import pytest

import constants as const
from benchgen import generate_split, sample_task, write_dataset
from conftest import CUMMAX_PROGRAM, NAMES_PROGRAM
from core import DslTypeError, ParseError
from engine import (Budget, Outcome, SolverConfig, SolveTrace, combine, read_traces, run_batch, solve_baseline,
	solve_exedec, solve_task, solve_tiips, write_traces)
from helper import drop_partial_line
from inductive import CandidateSubprogram, EnumerativeModel, InductiveModel
from list_dsl import OPERATIONS, ListExpr, Statement
from metrics import end_to_end_accuracy, evaluate, guidance_stats
from program import parse_program, program_steps, replay, update_task, verify
from string_dsl import GetToken, Regex
from transductive import OracleTransductiveModel, SubgoalPrediction, TransductiveModel

SERVER = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'oracle_server.py')


class ScriptedModel(InductiveModel):
	"""
	Proposes fixed subprograms keyed by the spec's target outputs
	"""

	def __init__(self, table):
		self.table = table

	def propose(self, spec, beam_width):
		asts = self.table.get(spec.outputs, [])
		return [CandidateSubprogram(ast, -float(j)) for j, ast in enumerate(asts)][:beam_width]


class FixedSubgoals(TransductiveModel):

	def __init__(self, *outputs):
		self.outputs = outputs

	def predict_subgoals(self, spec, beam_width):
		return [SubgoalPrediction(o, -float(j)) for j, o in enumerate(self.outputs)][:beam_width]


def names_table(spec, program, skip_first=True):
	"""
	Every ground-truth step keyed by its subgoal and by the state it starts
	from; the initial state is left out when skip_first is set
	"""
	steps = program_steps(program)
	subgoals = replay(program, spec)
	table, state = {}, spec
	for j, (step, outputs) in enumerate(zip(steps, subgoals)):
		table[outputs] = [step]
		if j or not skip_first:
			table[state.outputs] = [step]
		state = update_task(state, outputs)
	return table


def statement(target, token, *args):
	return Statement(target, ListExpr(OPERATIONS[token], args))


def test_combine_strings(names_program):
	assert combine(program_steps(names_program)) == names_program


def test_combine_renames_list_targets():
	program = combine([statement('x5', 'Sort', 'x1'), statement('x9', 'Reverse', 'x5')], 2)
	assert str(program) == 'x0 = INPUT | x1 = INPUT | x2 = Sort x1 | x3 = Reverse x2'


def test_combine_rejects_bad_input():
	with pytest.raises(DslTypeError):
		combine([])
	with pytest.raises(DslTypeError):
		combine([GetToken(Regex.WORD, 1), statement('x1', 'Sort', 'x0')])


def test_budget_validation():
	with pytest.raises(ValueError):
		Budget(inner_k=0)
	with pytest.raises(ValueError):
		Budget(beam=True)
	with pytest.raises(ValueError):
		Budget(wall_clock_cap=0)


def test_baseline_solves_cummax(cummax_spec):
	trace = solve_baseline(cummax_spec, EnumerativeModel())
	assert trace.outcome is Outcome.SOLVED
	assert trace.program == CUMMAX_PROGRAM
	assert trace.steps == 1
	assert trace.transductive_calls == 0


def test_tiips_solves_cummax_without_guidance(cummax_task):
	trace = solve_tiips(cummax_task.spec, EnumerativeModel(), OracleTransductiveModel(cummax_task))
	assert trace.solved
	assert trace.program == CUMMAX_PROGRAM
	assert trace.transductive_calls == 0
	assert [a.guided for a in trace.attempts] == [False]


def test_exedec_with_oracle_guidance(names_task):
	trace = solve_exedec(names_task.spec, EnumerativeModel(), OracleTransductiveModel(names_task))
	assert trace.solved
	assert trace.steps == 5
	assert trace.transductive_calls == 5
	assert trace.guidance_positions == [0, 1, 2, 3, 4]
	assert all(a.guided for a in trace.attempts)


def test_tiips_guides_once_then_finishes(names_task):
	model = ScriptedModel(names_table(names_task.spec, names_task.ground_truth))
	trace = solve_tiips(names_task.spec, model, OracleTransductiveModel(names_task))
	assert trace.solved
	assert trace.program == NAMES_PROGRAM
	assert trace.transductive_calls == 1
	assert [(a.outer, a.inner, a.guided) for a in trace.attempts] == [
		(0, 0, True), (1, 0, False), (1, 1, False), (1, 2, False), (1, 3, False)]
	assert trace.attempts[0].subgoal == ('1', '21', '8', '99')


def test_tiips_takes_deeper_ranks_later(names_task):
	model = ScriptedModel(names_table(names_task.spec, names_task.ground_truth))
	guide = FixedSubgoals(('9', '9', '9', '9'), ('1', '21', '8', '99'))
	trace = solve_tiips(names_task.spec, model, guide)
	assert trace.solved
	assert trace.transductive_calls == 2
	assert trace.guidance_positions == [0, 0]
	assert [a.subgoal for a in trace.attempts if a.guided] == [('1', '21', '8', '99')]


def test_tiips_skips_guidance_on_the_last_iteration(names_task):
	# subgoals only; the last subgoal equals the last state, so the inner loop finishes from there
	model = ScriptedModel({step.outputs: [step.subprogram] for step in names_task.gt_steps})
	oracle = OracleTransductiveModel(names_task)
	trace = solve_tiips(names_task.spec, model, oracle, Budget(outer_t=4))
	assert trace.outcome is Outcome.UNSOLVED
	assert trace.transductive_calls == 3
	assert trace.steps == 3
	trace = solve_tiips(names_task.spec, model, oracle, Budget(outer_t=5))
	assert trace.solved
	assert trace.transductive_calls == 4
	assert trace.attempts[-1].guided is False


def test_exedec_stops_when_no_prediction_fits(names_task):
	model = ScriptedModel(names_table(names_task.spec, names_task.ground_truth))
	trace = solve_exedec(names_task.spec, model, FixedSubgoals(('9', '9', '9', '9'), ('1', '21', '8', '99')))
	assert trace.outcome is Outcome.UNSOLVED
	assert trace.transductive_calls == 2
	assert trace.steps == 1


def test_every_candidate_faulting_is_an_error(names_spec):
	model = ScriptedModel({names_spec.outputs: [GetToken(Regex.NUMBER, 5)]})
	trace = solve_baseline(names_spec, model)
	assert trace.outcome is Outcome.ERROR
	assert trace.program is None


def test_step_limit(names_task):
	model = ScriptedModel(names_table(names_task.spec, names_task.ground_truth, skip_first=False))
	trace = solve_baseline(names_task.spec, model, Budget(step_limit=2))
	assert trace.outcome is Outcome.UNSOLVED
	assert trace.steps == 2
	assert solve_baseline(names_task.spec, model).solved


def test_wall_clock_cap(names_task):
	model = ScriptedModel(names_table(names_task.spec, names_task.ground_truth, skip_first=False))
	trace = solve_baseline(names_task.spec, model, Budget(wall_clock_cap=1e-9))
	assert trace.outcome is Outcome.UNSOLVED
	assert trace.detail == 'wall clock'
	trace = solve_tiips(names_task.spec, model, OracleTransductiveModel(names_task), Budget(wall_clock_cap=1e-9))
	assert trace.detail == 'wall clock'
	assert trace.transductive_calls == 0


def test_solver_config_validation():
	with pytest.raises(ValueError):
		SolverConfig(solver='beam')
	with pytest.raises(ValueError):
		SolverConfig(solver='tiips', transductive='none')
	with pytest.raises(ValueError):
		SolverConfig(inductive='magic')
	SolverConfig(solver='baseline', transductive='none')


def test_model_errors_become_error_traces(cummax_task):
	trace = solve_task(cummax_task, SolverConfig('exedec', transductive='heuristic', seed=3))
	assert trace.outcome is Outcome.ERROR
	assert trace.task_id == 'cummax'
	assert trace.seed == 3
	assert 'string' in trace.detail


def test_external_guidance(tmp_path, cummax_task):
	path = tmp_path / 'tasks.jsonl'
	write_dataset([cummax_task], path)
	config = SolverConfig('exedec', transductive='external:%s %s %s' % (sys.executable, SERVER, path))
	trace = solve_task(cummax_task, config)
	assert trace.solved
	assert trace.transductive_calls == 1
	assert trace.program == CUMMAX_PROGRAM


def test_trace_round_trip(tmp_path, names_task):
	model = ScriptedModel(names_table(names_task.spec, names_task.ground_truth))
	trace = solve_tiips(names_task.spec, model, OracleTransductiveModel(names_task))
	path = tmp_path / 'traces.jsonl'
	write_traces([trace], path)
	assert read_traces(path) == [trace]


def test_trace_call_count_is_checked(tmp_path, names_task):
	model = ScriptedModel(names_table(names_task.spec, names_task.ground_truth))
	record = solve_tiips(names_task.spec, model, OracleTransductiveModel(names_task)).to_record()
	record['transductive_calls'] = 3
	path = tmp_path / 'traces.jsonl'
	path.write_text(json.dumps(record) + '\n', encoding='utf-8')
	with pytest.raises(ParseError):
		read_traces(path)


@pytest.fixture
def list_tasks():
	return [sample_task('list', 'train_distribution', 'test', seed, task_id='t%d' % seed) for seed in range(4)]


def test_batch_is_deterministic(list_tasks):
	config = SolverConfig('tiips')
	a = run_batch(list_tasks, config)
	b = run_batch(list_tasks, config)
	assert [t.to_record() for t in a] == [t.to_record() for t in b]
	assert [t.task_id for t in a] == ['t0', 't1', 't2', 't3']


def test_batch_in_worker_processes(list_tasks):
	config = SolverConfig('exedec')
	serial = run_batch(list_tasks, config)
	parallel = run_batch(list_tasks, config, parallelism=2)
	assert [t.to_record() for t in parallel] == [t.to_record() for t in serial]


def test_batch_resume(tmp_path, list_tasks):
	path = tmp_path / 'traces.jsonl'
	config = SolverConfig('baseline', transductive='none')
	earlier = SolveTrace('baseline', 'list', Outcome.UNSOLVED, None, 0, detail='earlier run', task_id='t0')
	write_traces([earlier], path)
	traces = run_batch(list_tasks, config, out_path=str(path), resume=True)
	assert traces[0] == earlier
	assert [t.task_id for t in traces] == ['t0', 't1', 't2', 't3']
	assert [t.task_id for t in read_traces(path)] == ['t0', 't1', 't2', 't3']
	run_batch(list_tasks, config, out_path=str(path))
	assert read_traces(path)[0].detail != 'earlier run'


def test_batch_resumes_after_a_killed_write(tmp_path, list_tasks, caplog):
	config = SolverConfig('exedec')
	full = run_batch(list_tasks, config)
	path = tmp_path / 'traces.jsonl'
	run_batch(list_tasks[:2], config, out_path=str(path))
	with open(path, 'a', encoding='utf-8') as f:
		f.write('{"task_id": "t2", "out')
	traces = run_batch(list_tasks, config, out_path=str(path), resume=True)
	assert [t.to_record() for t in traces] == [t.to_record() for t in full]
	assert [t.to_record() for t in read_traces(path)] == [t.to_record() for t in full]
	assert 'unfinished last line' in caplog.text


def test_drop_partial_line(tmp_path):
	path = tmp_path / 'records.jsonl'
	path.write_text('{"a": 1}\n', encoding='utf-8')
	assert drop_partial_line(path) == 0
	assert path.read_text(encoding='utf-8') == '{"a": 1}\n'
	path.write_text('{"a": 1}\n{"b"', encoding='utf-8')
	assert drop_partial_line(path) == 4
	assert path.read_text(encoding='utf-8') == '{"a": 1}\n'
	path.write_text('{"b"', encoding='utf-8')
	assert drop_partial_line(path) == 4
	assert path.read_text(encoding='utf-8') == ''


def test_oracle_exedec_calls_once_per_ground_truth_step():
	tasks = [sample_task('list', 'length_generalization', 'test', seed, task_id='lg%d' % seed) for seed in range(10)]
	traces = run_batch(tasks, SolverConfig('exedec'))
	assert all(t.solved for t in traces)
	assert [t.transductive_calls for t in traces] == [5] * 10
	stats = guidance_stats(evaluate(traces, tasks))
	assert stats[('list', 'length_generalization', 'exedec')]['calls_mean'] == 5.0
	assert stats[('list', 'length_generalization', 'exedec')]['calls_std'] == 0.0


def test_baseline_never_asks_for_guidance(list_tasks):
	traces = run_batch(list_tasks, SolverConfig('baseline', transductive='none'))
	assert [t.transductive_calls for t in traces] == [0] * len(list_tasks)


def short_tasks(domain, longest, count, base_seed):
	return [t for t in generate_split(domain, 'train_distribution', 'test', count, base_seed=base_seed)
		if len(t.gt_steps) <= longest]


@pytest.mark.slow
@pytest.mark.parametrize('domain,longest,count', [('list', 3, 300), ('string', 4, 30)])
def test_oracle_guidance_solves_short_tasks(domain, longest, count):
	tasks = short_tasks(domain, longest, count, 8)
	by_id = {t.id: t for t in tasks}
	for solver in ('tiips', 'exedec'):
		traces = run_batch(tasks, SolverConfig(solver), parallelism=os.cpu_count() or 1)
		solved = [t for t in traces if t.solved]
		assert len(solved) >= 0.99 * len(tasks), solver
		for trace in solved:
			task = by_id[trace.task_id]
			assert verify(parse_program(task.domain, trace.program), task.spec)


@pytest.mark.slow
@pytest.mark.parametrize('category', const.CATEGORIES)
def test_tiips_needs_no_more_guidance_than_exedec(category):
	tasks = generate_split('list', category, 'test', 500, base_seed=4)
	jobs = os.cpu_count() or 1
	tiips = run_batch(tasks, SolverConfig('tiips'), parallelism=jobs)
	exedec = run_batch(tasks, SolverConfig('exedec'), parallelism=jobs)
	baseline = run_batch(tasks, SolverConfig('baseline', transductive='none'), parallelism=jobs)
	assert all(t.transductive_calls == 0 for t in baseline)
	both = [(a, b) for a, b in zip(tiips, exedec) if a.solved and b.solved]
	assert len(both) >= 0.9 * len(tasks)
	for a, b in both:
		assert a.transductive_calls <= b.transductive_calls, a.task_id
	for r in evaluate(tiips + exedec + baseline, tasks):
		if r.solved and r.syntactic_overlap == 1.0:
			assert r.intent_match == 1.0


@pytest.mark.slow
@pytest.mark.parametrize('domain,longest,count', [('list', 3, 60), ('string', 2, 18)])
def test_external_models_reproduce_builtin_runs(tmp_path, domain, longest, count):
	tasks = short_tasks(domain, longest, count, 9)
	path = tmp_path / 'tasks.jsonl'
	write_dataset(tasks, path)
	command = 'external:%s %s %s' % (sys.executable, SERVER, path)
	for solver in ('tiips', 'exedec'):
		builtin = run_batch(tasks, SolverConfig(solver))
		external = run_batch(tasks, SolverConfig(solver, inductive=command, transductive=command))
		assert [t.to_record() for t in external] == [t.to_record() for t in builtin]
		assert end_to_end_accuracy(evaluate(external, tasks)) == end_to_end_accuracy(evaluate(builtin, tasks))
