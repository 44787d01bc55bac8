"""
Domain-generic step operations: run one subprogram against a spec, apply the
domain's task update, combine steps into a program and replay a program
step by step.
"""
import logging

import constants as const
from core import Domain, DslTypeError, SynthError, check_value, values_equal
from list_dsl import (ListProgram, Statement, eval_list_expr, eval_list_program, parse_list_program,
	update_list_task, var_name)
from string_dsl import (StringExpr, StringProgram, eval_string_expr, eval_string_program,
	parse_string_program, update_string_task)

logger = logging.getLogger(__name__)


def execute_step(spec, ast):
	"""
	Returns the per-example outputs of one subprogram on the current state
	"""
	if spec.domain is Domain.STRING:
		if not isinstance(ast, StringExpr):
			raise DslTypeError('a string spec needs a string expression, got %r' % (ast,))
		return tuple(check_value(eval_string_expr(ast, ex.inputs[const.STRING_INPUT])) for ex in spec.examples)
	if not isinstance(ast, Statement):
		raise DslTypeError('a list spec needs a statement, got %r' % (ast,))
	expected = var_name(len(spec.examples[0].inputs))
	if ast.target != expected:
		raise DslTypeError('statement binds %s, the next variable is %s' % (ast.target, expected))
	return tuple(eval_list_expr(ast.expr, ex.inputs) for ex in spec.examples)


def update_task(spec, outputs, step_index=None):
	if spec.domain is Domain.STRING:
		return update_string_task(spec, outputs)
	return update_list_task(spec, outputs, step_index)


def is_solved(spec, outputs):
	return all(values_equal(out, ex.output) for out, ex in zip(outputs, spec.examples))


def combine(subprograms, num_inputs=None):
	"""
	Joins steps into one program. List statements get consecutive fresh
	targets starting after the inputs, and references are rewritten
	"""
	subprograms = list(subprograms)
	if not subprograms:
		raise DslTypeError('nothing to combine')
	if all(isinstance(s, StringExpr) for s in subprograms):
		return StringProgram(tuple(subprograms))
	if not all(isinstance(s, Statement) for s in subprograms):
		raise DslTypeError('cannot combine subprograms of different domains')
	if num_inputs is None:
		num_inputs = int(subprograms[0].target[1:])
	renamed, statements = {}, []
	for j, st in enumerate(subprograms):
		args = tuple(renamed.get(a, a) if isinstance(a, str) else a for a in st.expr.args)
		target = var_name(num_inputs + j)
		statements.append(Statement(target, type(st.expr)(st.expr.op, args)))
		renamed[st.target] = target
	return ListProgram(tuple(var_name(j) for j in range(num_inputs)), tuple(statements))


def program_steps(program):
	if isinstance(program, StringProgram):
		return program.exprs
	return program.statements


def render_program(program):
	return str(program)


def parse_program(domain, text):
	if domain is Domain.STRING:
		return parse_string_program(text)
	return parse_list_program(text)


def run_program(program, spec):
	"""
	Final per-example outputs of a whole program on the spec's inputs
	"""
	if spec.domain is Domain.STRING:
		return tuple(eval_string_program(program, ex.inputs[const.STRING_INPUT]) for ex in spec.examples)
	return tuple(eval_list_program(program, ex.inputs)[0] for ex in spec.examples)


def replay(program, spec):
	"""
	Per-step outputs of a program: one tuple of per-example values per step
	"""
	if spec.domain is Domain.STRING:
		return [tuple(eval_string_expr(e, ex.inputs[const.STRING_INPUT]) for ex in spec.examples)
			for e in program.exprs]
	envs = [eval_list_program(program, ex.inputs)[1] for ex in spec.examples]
	return [tuple(env[st.target] for env in envs) for st in program.statements]


def verify(program, spec):
	try:
		return is_solved(spec, run_program(program, spec))
	except SynthError:
		return False
