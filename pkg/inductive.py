"""
Inductive models: given a spec, propose ranked single-step subprograms.

EnumerativeModel enumerates the whole single-step space bottom-up, executes
every candidate on every example and keeps one representative per output
signature (the smallest AST, then the first in canonical-text order).
Ranking: exact solvers first, then size, then canonical text. In the string
domain only candidates whose outputs are prefixes of every remaining target
are returned.
"""
import abc
import itertools
import logging
import string
from collections import OrderedDict, defaultdict
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import constants as const
from core import BudgetExhausted, Domain, DslTypeError, SynthError, variant
from list_dsl import LAMBDAS, OPERATIONS, ListExpr, Statement, eval_list_expr, parse_list_statement, var_name
from string_dsl import (REGEXES, Boundary, Case, Compose, ConstStr, GetAll, GetFirst, GetFrom, GetSpan,
	GetToken, GetUpto, Remove, RemoveAll, Replace, StringExpr, SubStr, Substitute, SubstituteAll,
	ToCase, Trim, normalize_position, find_matches, parse_string_expr, render_regex)

logger = logging.getLogger(__name__)

_CHARSET = frozenset(const.CHARACTERS)

# modifications without character constants; evaluated once per distinct text
CHAR_FREE_MODIFICATIONS = tuple(
	[ToCase(case) for case in Case] + [Trim()]
	+ [GetFirst(r, i) for r in REGEXES for i in const.INDICES]
	+ [GetAll(r) for r in REGEXES]
	+ [Remove(r, i) for r in REGEXES for i in const.INDICES]
	+ [RemoveAll(r) for r in REGEXES]
)


@dataclass(frozen=True)
class CandidateSubprogram:
	ast: Union[StringExpr, Statement]
	score: float
	outputs: Optional[Tuple] = None

	def render(self):
		return self.ast.render()


class InductiveModel(abc.ABC):

	@abc.abstractmethod
	def propose(self, spec, beam_width):
		"""
		Returns at most beam_width CandidateSubprograms, best first
		"""

	def close(self):
		pass


def _try(expr, text):
	try:
		return expr.run(text)
	except SynthError:
		return None


class _Pool:
	"""
	Best representative per output signature, with a node budget
	"""

	def __init__(self, targets, cap):
		self.targets = targets
		self.cap = cap
		self.nodes = 0
		self.best = {}

	def tick(self, n=1):
		self.nodes += n
		if self.nodes > self.cap:
			raise BudgetExhausted('enumeration exceeded %d candidates' % self.cap)

	def offer(self, ast, sig):
		old = self.best.get(sig)
		if old is None or _smaller(ast, old):
			self.best[sig] = ast

	def ranked(self, beam_width):
		order = sorted(self.best.items(), key=lambda kv: (kv[0] != self.targets, kv[1].size, kv[1].render()))
		return [CandidateSubprogram(ast, -float(rank), sig) for rank, (sig, ast) in enumerate(order[:beam_width])]


def _smaller(a, b):
	if a.size != b.size:
		return a.size < b.size
	return a.render() < b.render()


def _keep(table, expr, sig):
	old = table.get(sig)
	if old is None or _smaller(expr, old):
		table[sig] = expr


class _InputBank:
	"""
	Everything about a tuple of string inputs that does not depend on the
	targets: substring expressions and character-free modifications of the
	inputs, and the outputs of character-free modifications on any text seen.
	"""

	def __init__(self, inputs):
		self.inputs = inputs
		self.entries = {}
		self._outputs = {}
		self._char_mods = {}
		self._substrings()
		self._modifications()

	def char_free(self, text):
		table = self._outputs.get(text)
		if table is None:
			table = {m: _try(m, text) for m in CHAR_FREE_MODIFICATIONS}
			self._outputs[text] = table
		return table

	def apply(self, m, text):
		table = self.char_free(text)
		if m in table:
			return table[m]
		return _try(m, text)

	def _substrings(self):
		inputs = self.inputs
		positions = {}
		for k in range(-const.MAX_POSITION, const.MAX_POSITION + 1):
			idx = tuple(normalize_position(k, len(s)) for s in inputs)
			if all(0 <= p < len(s) for p, s in zip(idx, inputs)):
				if idx not in positions or str(k) < str(positions[idx]):
					positions[idx] = k
		for (a, k1), (b, k2) in itertools.product(positions.items(), repeat=2):
			if all(x <= y for x, y in zip(a, b)):
				_keep(self.entries, SubStr(k1, k2), tuple(s[x:y + 1] for s, x, y in zip(inputs, a, b)))

		bounds = {}
		for r in REGEXES:
			for i in const.INDICES:
				spans = [_nth(r, i, s) for s in inputs]
				if None in spans:
					continue
				for expr in (GetUpto(r, i), GetFrom(r, i), GetToken(r, i)):
					_keep(self.entries, expr, tuple(expr.run(s) for s in inputs))
				for b in Boundary:
					key = tuple(span[b.value] for span in spans)
					text = '%s, %d, %s' % (render_regex(r), i, b.name)
					if key not in bounds or text < bounds[key][0]:
						bounds[key] = (text, (r, i, b))
		for (p1, (_, left)), (p2, (_, right)) in itertools.product(bounds.items(), repeat=2):
			if all(x <= y for x, y in zip(p1, p2)):
				_keep(self.entries, GetSpan(*left, *right), tuple(s[x:y] for s, x, y in zip(inputs, p1, p2)))

	def _modifications(self):
		tables = [self.char_free(s) for s in self.inputs]
		for m in CHAR_FREE_MODIFICATIONS:
			sig = tuple(table[m] for table in tables)
			if None not in sig:
				_keep(self.entries, m, sig)

	def char_mods(self, pool):
		"""
		Replace, Substitute and SubstituteAll of the inputs writing characters of pool
		"""
		key = frozenset(pool)
		found = self._char_mods.get(key)
		if found is not None:
			return found
		found = {}
		inputs = self.inputs
		exprs = []
		sources = sorted(set(''.join(inputs)) & _CHARSET)
		exprs.extend(Replace(c1, c2) for c1 in sources for c2 in pool if c1 != c2)
		for r in REGEXES:
			spans = [find_matches(r, s) for s in inputs]
			if not any(spans):
				continue
			exprs.extend(SubstituteAll(r, c) for c in pool)
			for i in const.INDICES:
				if all(_nth(r, i, s) is not None for s in inputs):
					exprs.extend(Substitute(r, i, c) for c in pool)
		for expr in exprs:
			sig = tuple(_try(expr, s) for s in inputs)
			if None not in sig:
				_keep(found, expr, sig)
		self._char_mods[key] = found
		return found


def _nth(r, i, text):
	spans = find_matches(r, text)
	if 0 < i <= len(spans):
		return spans[i - 1]
	if 0 < -i <= len(spans):
		return spans[i]
	return None


def _output_pool(targets):
	chars = set(''.join(targets))
	chars |= {c.swapcase() for c in chars}
	return ''.join(sorted(chars & _CHARSET))


def _inner_pool(inputs, chars):
	"""
	Characters an inner modification may write: the output pool, the input
	characters, every delimiter, and one unused lower, upper and digit
	character. An unused character that survives the outer modification
	would be in the output pool, so one per regex class stands for the rest.
	"""
	used = set(chars) | set(''.join(inputs))
	pool = used | set(const.DELIMITERS)
	for group in (string.ascii_lowercase, string.ascii_uppercase, string.digits):
		fresh = [c for c in group if c not in used]
		if fresh:
			pool.add(fresh[0])
	return ''.join(sorted(pool & _CHARSET))


class EnumerativeModel(InductiveModel):

	def __init__(self, node_cap=const.NODE_CAP, banks=8):
		self.node_cap = node_cap
		self._banks = OrderedDict()
		self._bank_limit = banks

	def propose(self, spec, beam_width):
		targets = spec.outputs
		pool = _Pool(targets, self.node_cap)
		if spec.domain is Domain.STRING:
			self._strings(spec, pool)
		else:
			self._lists(spec, pool)
		ranked = pool.ranked(beam_width)
		logger.debug('enumerated %d nodes, %d signatures kept, top %s',
			pool.nodes, len(pool.best), ranked[0].render() if ranked else None)
		return ranked

	def _bank(self, inputs):
		bank = self._banks.get(inputs)
		if bank is None:
			bank = _InputBank(inputs)
			self._banks[inputs] = bank
			if len(self._banks) > self._bank_limit:
				self._banks.popitem(last=False)
		else:
			self._banks.move_to_end(inputs)
		return bank

	def _strings(self, spec, pool):
		inputs = tuple(ex.inputs[const.STRING_INPUT] for ex in spec.examples)
		targets = pool.targets
		if not any(targets):
			return

		def consistent(sig):
			return any(sig) and all(t.startswith(o) for o, t in zip(sig, targets))

		chars = _output_pool(targets)
		for c in sorted(set(''.join(targets)) & _CHARSET):
			pool.tick()
			sig = (c,) * len(targets)
			if consistent(sig):
				pool.offer(ConstStr(c), sig)

		bank = self._bank(inputs)
		inner = dict(bank.entries)
		for sig, expr in bank.char_mods(_inner_pool(inputs, chars)).items():
			_keep(inner, expr, sig)
		pool.tick(len(inner))
		for sig, expr in inner.items():
			if consistent(sig):
				pool.offer(expr, sig)

		groups = defaultdict(list)
		for sig in inner:
			groups[sig[0]].append(sig)
		t0 = targets[0]
		for v0, sigs in groups.items():
			rest = set(''.join(v for sig in sigs for v in sig[1:])) & _CHARSET
			for outer, out0 in self._outer(bank, v0, t0, chars, rest):
				pool.tick(len(sigs))
				for sig in sigs:
					outs = [out0]
					for v, t in zip(sig[1:], targets[1:]):
						out = bank.apply(outer, v)
						if out is None or not t.startswith(out):
							break
						outs.append(out)
					else:
						outs = tuple(outs)
						if any(outs):
							pool.offer(Compose(outer, inner[sig]), outs)

	def _outer(self, bank, v0, t0, chars, rest):
		"""
		Modifications whose output on v0 is a prefix of t0; rest holds the
		characters of the other values in the group. Characters that
		land in the output are read off t0.
		"""
		for m, out in bank.char_free(v0).items():
			if out is not None and t0.startswith(out):
				yield m, out
		unchanged = t0.startswith(v0)
		for c1 in sorted(set(v0) & _CHARSET):
			at = v0.index(c1)
			if at < len(t0) and t0[at] != c1 and t0[at] in _CHARSET:
				out = v0.replace(c1, t0[at])
				if t0.startswith(out):
					yield Replace(c1, t0[at]), out
		if unchanged:
			absent = rest - set(v0)
			for c1 in sorted(absent):
				for c2 in chars:
					if c2 != c1:
						yield Replace(c1, c2), v0
		for r in REGEXES:
			spans = find_matches(r, v0)
			if not spans:
				if unchanged:
					for c in chars:
						yield SubstituteAll(r, c), v0
				continue
			start = spans[0][0]
			if start < len(t0) and t0[start] in _CHARSET:
				m = SubstituteAll(r, t0[start])
				out = m.run(v0)
				if t0.startswith(out):
					yield m, out
			for i in const.INDICES:
				span = _nth(r, i, v0)
				if span is None or span[0] >= len(t0) or t0[span[0]] not in _CHARSET:
					continue
				m = Substitute(r, i, t0[span[0]])
				out = m.run(v0)
				if t0.startswith(out):
					yield m, out

	def _lists(self, spec, pool):
		examples = spec.examples
		names = list(examples[0].inputs)
		kinds = {'int': [], 'list': []}
		for name in names:
			kinds['int' if variant(examples[0].inputs[name]) == 'Int' else 'list'].append(name)
		for kind in ('map', 'predicate', 'combine'):
			kinds[kind] = [lam for lam in LAMBDAS.values() if lam.kind == kind]
		existing = {tuple(ex.inputs[n] for ex in examples) for n in names}
		target = var_name(len(names))
		for op in OPERATIONS.values():
			for args in itertools.product(*(kinds[kind] for kind in op.signature)):
				pool.tick()
				expr = ListExpr(op, args)
				try:
					sig = tuple(eval_list_expr(expr, ex.inputs) for ex in examples)
				except SynthError:
					continue
				if sig in existing and sig != pool.targets:
					continue
				pool.offer(Statement(target, expr), sig)


_default = EnumerativeModel()


def enumerate_step(spec, beam_width=const.BEAM):
	return _default.propose(spec, beam_width)


def parse_step(spec, text):
	"""
	Parses one subprogram in the context of spec and checks operand variants
	"""
	if spec.domain is Domain.STRING:
		return parse_string_expr(text)
	inputs = spec.examples[0].inputs
	st = parse_list_statement(text, list(inputs))
	for kind, arg in zip(st.expr.op.signature, st.expr.args):
		if kind in ('int', 'list'):
			expected = 'Int' if kind == 'int' else 'IntList'
			if variant(inputs[arg]) != expected:
				raise DslTypeError('%s expects %s for %s' % (st.expr.op.token, expected, arg))
	return st


class ExternalInductiveModel(InductiveModel):
	"""
	Delegates proposals to an external process; entries that do not parse
	or type-check are dropped
	"""

	def __init__(self, session):
		self.session = session

	def propose(self, spec, beam_width):
		candidates = []
		for text in self.session.synthesize(spec, beam_width):
			try:
				ast = parse_step(spec, text)
			except SynthError as e:
				logger.warning('dropping external program %r: %s', text, e)
				continue
			candidates.append(CandidateSubprogram(ast, -float(len(candidates))))
		return candidates[:beam_width]

	def close(self):
		self.session.close()


def external_inductive_adapter(session):
	return ExternalInductiveModel(session)
