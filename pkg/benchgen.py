"""
Random task generation for both domains: per-category program plans, the
train/test predicates of the generalization splits, input sampling and the
(state, subgoal, subprogram) training triples.
"""
import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

import constants as const
from core import BudgetExhausted, Domain, DslTypeError, Example, IOSpec, ParseError, SynthError, values_equal
from helper import decode_spec, decode_value, dump_line, encode_spec, encode_value, read_records
from list_dsl import (FIRST_ORDER, HIGHER_ORDER, LAMBDAS, OPERATIONS, ListExpr, ListProgram, Statement,
	parse_list_statement, var_name)
from program import parse_program, program_steps, replay, run_program, update_task
from string_dsl import (Boundary, Case, Compose, ConstStr, GetAll, GetFirst, GetFrom, GetSpan, GetToken,
	GetUpto, Regex, Remove, RemoveAll, Replace, StringProgram, SubStr, Substitute, SubstituteAll, Substring,
	ToCase, Trim, parse_string_expr)

logger = logging.getLogger(__name__)

# string expression families
SUBSTRING = 'substring'
MODIFICATION = 'modification'
CONST = 'const'
COMPOSE_MS = 'compose_ms'
COMPOSE_MM = 'compose_mm'

_ALL = (SUBSTRING, MODIFICATION, CONST, COMPOSE_MS, COMPOSE_MM)
_PLAIN = (SUBSTRING, MODIFICATION, CONST)
_NONSUB = (MODIFICATION, CONST)
_COMPOSE = (COMPOSE_MS, COMPOSE_MM)

# list operation groups
GROUP_A = FIRST_ORDER + ('Map',)
GROUP_B = tuple(tok for tok in HIGHER_ORDER if tok != 'Map')
_ALL_OPS = tuple(OPERATIONS)
_COMBINERS = tuple(tok for tok, lam in LAMBDAS.items() if lam.kind == 'combine')
TRAIN_SCANS = ('(-)', '(min)')
TEST_SCANS = ('(+)', '(*)', '(max)')

_INT_OPS = ('Head', 'Last', 'Access', 'Minimum', 'Maximum', 'Sum', 'Count')
_SLOT_TRIES = 50
_TASK_FIELDS = ('id', 'domain', 'category', 'split', 'examples', 'ground_truth', 'gt_steps', 'seed')


@dataclass(frozen=True)
class GtStep:
	subprogram: object
	outputs: Tuple


@dataclass(frozen=True)
class TaskRecord:
	id: str
	domain: Domain
	category: str
	split: str
	spec: IOSpec
	ground_truth: object
	gt_steps: Tuple[GtStep, ...]
	seed: int


@dataclass(frozen=True)
class TrainingTriple:
	state: IOSpec
	subgoal: Tuple
	subprogram: object


def _pick(rng, items):
	return items[int(rng.integers(len(items)))]


def _length(rng, lo, hi):
	return int(rng.integers(lo, hi + 1))


def _check_combination(domain, category, split):
	if domain not in (Domain.STRING, Domain.LIST):
		raise ParseError('unknown domain %r' % (domain,))
	if category not in const.CATEGORIES:
		raise ParseError('unknown category %r' % (category,))
	if split not in const.SPLITS:
		raise ParseError('unknown split %r' % (split,))


def string_family(expr):
	if isinstance(expr, Compose):
		return COMPOSE_MS if isinstance(expr.inner, Substring) else COMPOSE_MM
	if isinstance(expr, Substring):
		return SUBSTRING
	if isinstance(expr, ConstStr):
		return CONST
	return MODIFICATION


def _ordered(kinds, first, second):
	# first+ second+
	s = kinds.count(first)
	return 1 <= s < len(kinds) and kinds == [first] * s + [second] * (len(kinds) - s)


def _string_predicate(category, train, families):
	n = len(families)
	composed = any(f in _COMPOSE for f in families)
	if category == 'train_distribution':
		return 1 <= n <= 6
	if category == 'length_generalization':
		return 1 <= n <= 6 if train else 7 <= n <= 10
	if category == 'add_operation_functionality':
		return 1 <= n <= 6 and (COMPOSE_MS in families) != train
	if category == 'compose_new_operation':
		if train:
			return (n == 1 and composed) or (2 <= n <= 6 and not composed)
		return 2 <= n <= 6 and composed
	if not 2 <= n <= 6 or composed:
		return False
	kinds = ['sub' if f == SUBSTRING else 'non' for f in families]
	if category == 'compose_different_concepts':
		return len(set(kinds)) == (1 if train else 2)
	return _ordered(kinds, 'sub', 'non') if train else _ordered(kinds, 'non', 'sub')


def _list_predicate(category, train, statements):
	n = len(statements)
	ops = [st.expr.op.token for st in statements]
	if category == 'train_distribution':
		return 1 <= n <= 4
	if category == 'length_generalization':
		return 1 <= n <= 4 if train else n == 5
	if category == 'compose_different_concepts':
		groups = {'a' if op in GROUP_A else 'b' for op in ops}
		return 1 <= n <= 4 and len(groups) == 1 if train else 2 <= n <= 4 and len(groups) == 2
	if category == 'switch_concept_order':
		kinds = ['a' if op in GROUP_A else 'b' for op in ops]
		if not 2 <= n <= 4:
			return False
		return _ordered(kinds, 'a', 'b') if train else _ordered(kinds, 'b', 'a')
	if category == 'compose_new_operation':
		if train:
			return ops == ['Scanl1'] or (2 <= n <= 4 and 'Scanl1' not in ops)
		return 2 <= n <= 4 and 'Scanl1' in ops
	scans = [st.expr.args[0].token for st in statements if st.expr.op.token == 'Scanl1']
	if not 1 <= n <= 4:
		return False
	if train:
		return all(s in TRAIN_SCANS for s in scans)
	return any(s in TEST_SCANS for s in scans)


def category_predicate(domain, category, split, program):
	"""
	True when the program belongs to the given split of the category
	"""
	train = split == 'train'
	steps = program_steps(program)
	if domain is Domain.STRING:
		return _string_predicate(category, train, [string_family(e) for e in steps])
	return _list_predicate(category, train, steps)


def _string_plan(category, train, rng):
	"""
	One tuple of allowed families per program slot
	"""
	if category == 'train_distribution' or (category == 'length_generalization' and train):
		return [_ALL] * _length(rng, 1, 6)
	if category == 'length_generalization':
		return [_ALL] * _length(rng, 7, 10)
	if category == 'compose_different_concepts':
		n = _length(rng, 2, 6)
		if train:
			return [_pick(rng, [(SUBSTRING,), _NONSUB])] * n
		slots = [_pick(rng, [(SUBSTRING,), _NONSUB]) for _ in range(n)]
		a, b = rng.choice(n, size=2, replace=False)
		slots[a], slots[b] = (SUBSTRING,), _NONSUB
		return slots
	if category == 'switch_concept_order':
		n = _length(rng, 2, 6)
		s = _length(rng, 1, n - 1)
		first, second = ((SUBSTRING,), _NONSUB) if train else (_NONSUB, (SUBSTRING,))
		return [first] * s + [second] * (n - s)
	if category == 'compose_new_operation':
		if train and rng.random() < const.SINGLE_OP_TRAIN_FRACTION:
			return [_COMPOSE]
		n = _length(rng, 2, 6)
		if train:
			return [_PLAIN] * n
		slots = [_ALL] * n
		slots[int(rng.integers(n))] = _COMPOSE
		return slots
	n = _length(rng, 1, 6)
	if train:
		return [tuple(f for f in _ALL if f != COMPOSE_MS)] * n
	slots = [_ALL] * n
	slots[int(rng.integers(n))] = (COMPOSE_MS,)
	return slots


def _list_plan(category, train, rng):
	"""
	One (allowed operations, allowed Scanl1 lambdas) pair per statement
	"""
	every = (_ALL_OPS, _COMBINERS)
	if category == 'train_distribution' or (category == 'length_generalization' and train):
		return [every] * _length(rng, 1, 4)
	if category == 'length_generalization':
		return [every] * 5
	if category == 'compose_different_concepts':
		if train:
			return [(_pick(rng, [GROUP_A, GROUP_B]), _COMBINERS)] * _length(rng, 1, 4)
		n = _length(rng, 2, 4)
		slots = [(_pick(rng, [GROUP_A, GROUP_B]), _COMBINERS) for _ in range(n)]
		a, b = rng.choice(n, size=2, replace=False)
		slots[a], slots[b] = (GROUP_A, _COMBINERS), (GROUP_B, _COMBINERS)
		return slots
	if category == 'switch_concept_order':
		n = _length(rng, 2, 4)
		s = _length(rng, 1, n - 1)
		first, second = (GROUP_A, GROUP_B) if train else (GROUP_B, GROUP_A)
		return [(first, _COMBINERS)] * s + [(second, _COMBINERS)] * (n - s)
	if category == 'compose_new_operation':
		if train and rng.random() < const.SINGLE_OP_TRAIN_FRACTION:
			return [(('Scanl1',), _COMBINERS)]
		n = _length(rng, 2, 4)
		if train:
			return [(tuple(op for op in _ALL_OPS if op != 'Scanl1'), _COMBINERS)] * n
		slots = [every] * n
		slots[int(rng.integers(n))] = (('Scanl1',), _COMBINERS)
		return slots
	n = _length(rng, 1, 4)
	if train:
		return [(_ALL_OPS, TRAIN_SCANS)] * n
	slots = [every] * n
	slots[int(rng.integers(n))] = (('Scanl1',), TEST_SCANS)
	return slots


# string inputs

def _token(rng):
	kind = int(rng.integers(5))
	if kind == 0:
		return ''.join(str(int(d)) for d in rng.integers(10, size=_length(rng, 1, 4)))
	letters = ''.join(chr(ord('a') + int(c)) for c in rng.integers(26, size=_length(rng, 2, 8)))
	if kind == 1:
		return letters
	if kind == 2:
		return letters.upper()
	return letters.capitalize()


def _random_text(rng):
	"""
	1-3 tokens (digit runs, lower, upper or proper words) with sampled delimiters
	"""
	text = ''
	for j in range(_length(rng, 1, 3)):
		if j or rng.random() < 0.2:
			text += _pick(rng, const.DELIMITERS)
		text += _token(rng)
	if rng.random() < 0.2:
		text += _pick(rng, const.DELIMITERS)
	return text


def _regex(rng, texts):
	present = sorted(set(''.join(texts)) & set(const.DELIMITERS))
	if present and rng.random() < 0.4:
		return _pick(rng, present)
	return _pick(rng, list(Regex))


def _index(rng):
	# small indices are the common case
	if rng.random() < 0.7:
		return _pick(rng, (1, 1, 2, -1))
	return _pick(rng, const.INDICES)


def _substring(rng, texts):
	kind = int(rng.integers(5))
	if kind == 0:
		return SubStr(_length(rng, -12, 12), _length(rng, -12, 12))
	if kind == 1:
		return GetSpan(_regex(rng, texts), _index(rng), _pick(rng, list(Boundary)),
			_regex(rng, texts), _index(rng), _pick(rng, list(Boundary)))
	return _pick(rng, (GetUpto, GetFrom, GetToken))(_regex(rng, texts), _index(rng))


def _modification(rng, texts):
	kind = int(rng.integers(9))
	c = _pick(rng, const.CHARACTERS)
	if kind == 0:
		return ToCase(_pick(rng, list(Case)))
	if kind == 1:
		return Replace(_pick(rng, ''.join(texts)), c)
	if kind == 2:
		return Trim()
	if kind == 3:
		return GetFirst(_regex(rng, texts), _index(rng))
	if kind == 4:
		return GetAll(_regex(rng, texts))
	if kind == 5:
		return Substitute(_regex(rng, texts), _index(rng), c)
	if kind == 6:
		return SubstituteAll(_regex(rng, texts), c)
	if kind == 7:
		return Remove(_regex(rng, texts), _index(rng))
	return RemoveAll(_regex(rng, texts))


def _string_expr(rng, family, texts):
	if family == SUBSTRING:
		return _substring(rng, texts)
	if family == MODIFICATION:
		return _modification(rng, texts)
	if family == CONST:
		return ConstStr(_pick(rng, const.CHARACTERS))
	if family == COMPOSE_MS:
		return Compose(_modification(rng, texts), _substring(rng, texts))
	return Compose(_modification(rng, texts), _modification(rng, texts))


def _step_outputs(expr, texts):
	try:
		outputs = [expr.run(t) for t in texts]
	except SynthError:
		return None
	return outputs if all(outputs) else None


def _distinct_texts(rng, count):
	texts = []
	while len(texts) < count:
		text = _random_text(rng)
		if text not in texts:
			texts.append(text)
	return texts


def _string_spec(program, texts):
	"""
	The spec of a program on given inputs, or None when a step is degenerate
	"""
	for expr in program.exprs:
		if _step_outputs(expr, texts) is None:
			return None
	spec = IOSpec(Domain.STRING, tuple(Example({const.STRING_INPUT: t}, '') for t in texts))
	try:
		outputs = run_program(program, spec)
	except SynthError:
		return None
	if len(set(outputs)) == 1:
		return None
	return spec.with_outputs(outputs)


def _sample_string(plan, rng):
	texts = _distinct_texts(rng, const.STRING_EXAMPLES)
	exprs = []
	for families in plan:
		for _ in range(_SLOT_TRIES):
			expr = _string_expr(rng, _pick(rng, families), texts)
			if _step_outputs(expr, texts) is not None:
				break
		else:
			return None
		exprs.append(expr)
	program = StringProgram(tuple(exprs))
	spec = _string_spec(program, texts)
	return None if spec is None else (program, spec)


# list inputs

def _kind_of(token):
	return 'int' if token in _INT_OPS else 'list'


def _input_kinds(program):
	"""
	Input kinds read off the operand positions that use them; unused inputs are lists
	"""
	kinds = {name: 'list' for name in program.inputs}
	for st in program.statements:
		for kind, arg in zip(st.expr.op.signature, st.expr.args):
			if isinstance(arg, str) and arg in kinds:
				kinds[arg] = kind
	return [kinds[name] for name in program.inputs]


def _random_inputs(rng, kinds):
	lo, hi = const.LIST_ELEMENT_RANGE
	values = []
	for kind in kinds:
		if kind == 'int':
			values.append(_length(rng, *const.INT_INPUT_RANGE))
		else:
			n = _length(rng, *const.LIST_INPUT_LENGTH)
			values.append(tuple(int(x) for x in rng.integers(lo, hi + 1, size=n)))
	return values


def _list_statement(rng, slot, bound, last):
	ops, scans = slot
	have = {kind for _, kind in bound}
	usable = [tok for tok in ops if all(k in have for k in OPERATIONS[tok].signature if k in ('int', 'list'))]
	if not usable:
		return None
	op = OPERATIONS[_pick(rng, usable)]
	args = []
	for kind in op.signature:
		if kind in ('int', 'list'):
			names = [name for name, k in bound if k == kind]
			# chain through the previous statement when its kind fits
			args.append(last if last in names and rng.random() < 0.7 else _pick(rng, names))
		elif op.token == 'Scanl1':
			args.append(LAMBDAS[_pick(rng, scans)])
		else:
			args.append(LAMBDAS[_pick(rng, [tok for tok, lam in LAMBDAS.items() if lam.kind == kind])])
	return Statement(var_name(len(bound)), ListExpr(op, tuple(args)))


def _dead_code(program):
	used = {a for st in program.statements for a in st.expr.variables}
	return any(st.target not in used for st in program.statements[:-1])


def _list_spec(program, rng):
	"""
	Samples inputs until every statement runs and changes the state, or None
	"""
	kinds = _input_kinds(program)
	names = list(program.inputs)
	for _ in range(const.INPUT_RETRIES):
		examples = [Example(dict(zip(names, _random_inputs(rng, kinds))), 0) for _ in range(const.LIST_EXAMPLES)]
		try:
			spec = IOSpec(Domain.LIST, tuple(examples))
			steps = replay(program, spec)
		except SynthError:
			continue
		seen = [tuple(ex.inputs[n] for ex in spec.examples) for n in names]
		fresh = True
		for values in steps:
			if any(all(values_equal(a, b) for a, b in zip(values, old)) for old in seen):
				fresh = False
				break
			seen.append(values)
		if not fresh or all(values_equal(v, steps[-1][0]) for v in steps[-1]):
			continue
		try:
			return spec.with_outputs(steps[-1])
		except SynthError:
			continue
	return None


def _sample_list(plan, rng):
	kinds = ['list']
	if rng.random() < const.SECOND_INPUT_PROB:
		kinds.append(_pick(rng, ['int', 'list']))
	bound = [(var_name(j), k) for j, k in enumerate(kinds)]
	statements = []
	for slot in plan:
		st = _list_statement(rng, slot, bound, statements[-1].target if statements else None)
		if st is None:
			return None
		statements.append(st)
		bound.append((st.target, _kind_of(st.expr.op.token)))
	program = ListProgram(tuple(var_name(j) for j in range(len(kinds))), tuple(statements))
	if _dead_code(program):
		return None
	spec = _list_spec(program, rng)
	return None if spec is None else (program, spec)


def _gt_steps(program, spec):
	return tuple(GtStep(step, outputs) for step, outputs in zip(program_steps(program), replay(program, spec)))


def task_from_program(task_id, spec, program, category='train_distribution', split='test', seed=0):
	"""
	A TaskRecord for a known program; the spec outputs must be what the program computes
	"""
	if not all(values_equal(a, b) for a, b in zip(run_program(program, spec), spec.outputs)):
		raise DslTypeError('%s does not solve the given examples' % program)
	return TaskRecord(task_id, spec.domain, category, split, spec, program, _gt_steps(program, spec), int(seed))


def sample_task(domain, category, split, rng_seed, task_id=None, resample_cap=const.RESAMPLE_CAP):
	"""
	Rejection-samples one task of the given split; deterministic in rng_seed
	"""
	domain = Domain(domain)
	_check_combination(domain, category, split)
	train = split == 'train'
	rng = np.random.default_rng(rng_seed)
	plan = None
	for attempt in range(resample_cap):
		# a plan survives PLAN_ATTEMPTS rejections
		if attempt % const.PLAN_ATTEMPTS == 0:
			plan = _string_plan(category, train, rng) if domain is Domain.STRING else _list_plan(category, train, rng)
		if domain is Domain.STRING:
			sampled = _sample_string(plan, rng)
		else:
			sampled = _sample_list(plan, rng)
		if sampled is None:
			continue
		program, spec = sampled
		if not category_predicate(domain, category, split, program):
			continue
		logger.debug('%s/%s/%s seed %d: accepted after %d rejections', domain.value, category, split, rng_seed, attempt)
		return task_from_program(task_id or '%s-%s-%s-%d' % (domain.value, category, split, rng_seed),
			spec, program, category, split, rng_seed)
	raise BudgetExhausted('no %s %s/%s task within %d attempts' % (domain.value, category, split, resample_cap))


def sample_inputs(domain, program, rng_seed, retries=const.RESAMPLE_CAP):
	"""
	Examples on which the program runs, every step is non-degenerate and the
	outputs are not all identical
	"""
	domain = Domain(domain)
	rng = np.random.default_rng(rng_seed)
	for _ in range(retries):
		if domain is Domain.STRING:
			spec = _string_spec(program, _distinct_texts(rng, const.STRING_EXAMPLES))
		else:
			spec = _list_spec(program, rng)
		if spec is not None:
			return list(spec.examples)
	raise BudgetExhausted('no usable inputs for %s within %d attempts' % (program, retries))


def extract_training_triples(task):
	"""
	One (state, subgoal, subprogram) triple per ground-truth step
	"""
	triples = []
	state = task.spec
	for j, step in enumerate(task.gt_steps):
		triples.append(TrainingTriple(state, step.outputs, step.subprogram))
		state = update_task(state, step.outputs, j)
	return triples


def task_seed(base_seed, domain, category, split, index):
	ss = np.random.SeedSequence([base_seed, const.DOMAINS.index(Domain(domain).value),
		const.CATEGORIES.index(category), const.SPLITS.index(split), index])
	return int(ss.generate_state(1)[0])


def task_id(domain, category, split, index):
	return '%s-%s-%s-%05d' % (Domain(domain).value, category, split, index)


def generate_split(domain, category, split, count, base_seed=0, progress=None):
	"""
	count tasks with independent seed streams per index
	"""
	indices = range(count) if progress is None else progress(range(count))
	return [sample_task(domain, category, split, task_seed(base_seed, domain, category, split, j),
		task_id=task_id(domain, category, split, j)) for j in indices]


def task_to_record(task):
	return {
		'id': task.id,
		'domain': task.domain.value,
		'category': task.category,
		'split': task.split,
		'examples': encode_spec(task.spec)['examples'],
		'ground_truth': str(task.ground_truth),
		'gt_steps': [{'subprogram': step.subprogram.render(), 'outputs': [encode_value(v) for v in step.outputs]}
			for step in task.gt_steps],
		'seed': task.seed,
	}


def _strict(record, fields, what):
	if not isinstance(record, dict):
		raise ParseError('%s must be an object' % what)
	unknown = sorted(set(record) - set(fields))
	if unknown:
		raise ParseError('unknown field %r in %s' % (unknown[0], what))
	missing = sorted(set(fields) - set(record))
	if missing:
		raise ParseError('missing field %r in %s' % (missing[0], what))


def _decode_steps(domain, spec, program, raw):
	if not isinstance(raw, list) or len(raw) != len(program_steps(program)):
		raise ParseError('gt_steps must list one entry per program step')
	bound = list(spec.examples[0].inputs)
	steps = []
	for step, expected in zip(raw, program_steps(program)):
		_strict(step, ('subprogram', 'outputs'), 'gt step')
		if not isinstance(step['subprogram'], str) or not isinstance(step['outputs'], list):
			raise ParseError('gt step needs a subprogram text and an outputs list')
		if domain is Domain.STRING:
			sub = parse_string_expr(step['subprogram'])
		else:
			sub = parse_list_statement(step['subprogram'], bound)
			bound.append(sub.target)
		if sub != expected:
			raise ParseError('gt step %s does not match the ground truth' % step['subprogram'])
		steps.append(GtStep(sub, tuple(decode_value(v) for v in step['outputs'])))
	return tuple(steps)


def record_to_task(record):
	try:
		domain = Domain(record['domain'])
	except ValueError:
		raise ParseError('unknown domain %r' % (record['domain'],)) from None
	_check_combination(domain, record['category'], record['split'])
	if not isinstance(record['id'], str):
		raise ParseError('id must be a string')
	if not isinstance(record['seed'], int) or isinstance(record['seed'], bool):
		raise ParseError('seed must be an integer')
	if not isinstance(record['ground_truth'], str):
		raise ParseError('ground_truth must be program text')
	spec = decode_spec(domain, {'examples': record['examples']})
	program = parse_program(domain, record['ground_truth'])
	stored = _decode_steps(domain, spec, program, record['gt_steps'])
	task = task_from_program(record['id'], spec, program, record['category'], record['split'], record['seed'])
	for j, (got, replayed) in enumerate(zip(stored, task.gt_steps)):
		if len(got.outputs) != len(replayed.outputs) or not all(
				values_equal(a, b) for a, b in zip(got.outputs, replayed.outputs)):
			raise ParseError('gt step %d outputs disagree with the ground truth' % j)
	return task


def write_dataset(tasks, path):
	with open(path, 'w', encoding='utf-8') as f:
		for task in tasks:
			f.write(dump_line(task_to_record(task)))
	logger.info('wrote %d tasks to %s', len(tasks), path)


def read_dataset(path):
	tasks = []
	for number, record in read_records(path, _TASK_FIELDS):
		try:
			tasks.append(record_to_task(record))
		except SynthError as e:
			raise ParseError('%s:%d: %s' % (path, number, e.detail), line=number) from None
	return tasks


def write_triples(tasks, path):
	"""
	JSON lines of (state, subgoal, subprogram) for every step of every task
	"""
	count = 0
	with open(path, 'w', encoding='utf-8') as f:
		for task in tasks:
			for j, triple in enumerate(extract_training_triples(task)):
				f.write(dump_line({'task_id': task.id, 'step': j, 'state': encode_spec(triple.state),
					'subgoal': [encode_value(v) for v in triple.subgoal], 'subprogram': triple.subprogram.render()}))
				count += 1
	logger.info('wrote %d training triples to %s', count, path)
	return count
