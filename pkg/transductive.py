"""
Subgoal models: given the current state, predict the per-example outputs of
the next subprogram.
"""
import abc
import logging
import re
from dataclasses import dataclass
from typing import Tuple

import constants as const
from core import BudgetExhausted, Domain, DslTypeError, SynthError, check_value, variant
from helper import decode_value
from program import update_task

logger = logging.getLogger(__name__)

_LEADING = re.compile('[^%s]+' % re.escape(const.DELIMITERS))


@dataclass(frozen=True)
class SubgoalPrediction:
	outputs: Tuple
	score: float = 0.0


class TransductiveModel(abc.ABC):

	@abc.abstractmethod
	def predict_subgoals(self, spec, beam_width):
		"""
		Returns at most beam_width SubgoalPredictions, best first
		"""

	def close(self):
		pass


def build_subtask(spec, prediction):
	"""
	Same inputs as spec, the predicted outputs as targets
	"""
	outputs = prediction.outputs if isinstance(prediction, SubgoalPrediction) else tuple(prediction)
	if len(outputs) != len(spec.examples):
		raise DslTypeError('prediction has %d outputs for %d examples' % (len(outputs), len(spec.examples)))
	return spec.with_outputs(tuple(check_value(v) for v in outputs))


def oracle_subgoals(spec, task, consumed_steps):
	"""
	The ground-truth outputs of the first unconsumed step of task
	"""
	if consumed_steps >= len(task.gt_steps):
		raise BudgetExhausted('all %d ground-truth steps consumed' % len(task.gt_steps))
	outputs = task.gt_steps[consumed_steps].outputs
	if len(outputs) != len(spec.examples):
		raise DslTypeError('task %s has %d examples, spec has %d' % (task.id, len(outputs), len(spec.examples)))
	return SubgoalPrediction(outputs, 0.0)


class OracleTransductiveModel(TransductiveModel):
	"""
	Ground-truth guidance for one task. The number of consumed steps is found
	by matching the current state against the ground-truth state chain;
	states off that chain get no prediction.
	"""

	def __init__(self, task):
		self.task = task
		self._states = [task.spec]
		for j, step in enumerate(task.gt_steps):
			self._states.append(update_task(self._states[-1], step.outputs, j))

	def consumed_steps(self, spec):
		for j, state in enumerate(self._states):
			if state == spec:
				return j
		return None

	def predict_subgoals(self, spec, beam_width):
		consumed = self.consumed_steps(spec)
		if consumed is None or consumed >= len(self.task.gt_steps):
			logger.debug('task %s: state is off the ground-truth chain or fully consumed', self.task.id)
			return []
		return [oracle_subgoals(spec, self.task, consumed)][:beam_width]


def _leading_token(text):
	if not text:
		return ''
	if text[0] in const.DELIMITERS:
		return text[0]
	return _LEADING.match(text).group(0)


def _common_prefix(texts):
	prefix = texts[0]
	for t in texts[1:]:
		while not t.startswith(prefix):
			prefix = prefix[:-1]
	return prefix


class HeuristicTransductiveModel(TransductiveModel):
	"""
	Model-free string guidance: the leading token of every remaining target,
	then the common prefix of the targets, then their first characters
	"""

	def predict_subgoals(self, spec, beam_width):
		if spec.domain is not Domain.STRING:
			raise DslTypeError('the heuristic subgoal model only handles string specs')
		targets = [ex.output for ex in spec.examples]
		if not any(targets):
			return []
		candidates = [tuple(_leading_token(t) for t in targets)]
		prefix = _common_prefix(targets)
		if prefix and all(targets):
			candidates.append(tuple(prefix for _ in targets))
		candidates.append(tuple(t[:1] for t in targets))
		predictions = []
		for outputs in candidates:
			if outputs not in [p.outputs for p in predictions]:
				predictions.append(SubgoalPrediction(outputs, -float(len(predictions))))
		return predictions[:beam_width]


def _valid_prediction(spec, raw):
	if len(raw) != len(spec.examples):
		raise DslTypeError('%d outputs for %d examples' % (len(raw), len(spec.examples)))
	outputs = tuple(decode_value(v) for v in raw)
	kinds = {variant(v) for v in outputs}
	if len(kinds) != 1:
		raise DslTypeError('outputs of different variants')
	if (spec.domain is Domain.STRING) != (kinds == {'Text'}):
		raise DslTypeError('%s outputs for a %s spec' % (kinds.pop(), spec.domain.value))
	return outputs


class ExternalTransductiveModel(TransductiveModel):
	"""
	Delegates predictions to an external process; entries of the wrong
	arity or type are dropped
	"""

	def __init__(self, session):
		self.session = session

	def predict_subgoals(self, spec, beam_width):
		predictions = []
		for raw in self.session.subgoals(spec, beam_width):
			try:
				outputs = _valid_prediction(spec, raw)
			except SynthError as e:
				logger.warning('dropping external subgoal %r: %s', raw, e)
				continue
			predictions.append(SubgoalPrediction(outputs, -float(len(predictions))))
		return predictions[:beam_width]

	def close(self):
		self.session.close()


def external_transductive_adapter(session):
	return ExternalTransductiveModel(session)
