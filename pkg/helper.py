"""
JSON-lines files and value codecs shared by datasets, traces and the wire
protocol, plus the mean/std and confidence helpers of the report.
"""
import json
import logging

import numpy as np
from scipy import stats

from core import Example, IOSpec, ParseError, check_value

logger = logging.getLogger(__name__)


def encode_value(value):
	"""
	Returns the JSON form of a value: lists for integer lists, everything else as is
	"""
	if isinstance(value, tuple):
		return list(value)
	return value


def encode_spec(spec):
	return {'examples': [
		{'inputs': {name: encode_value(v) for name, v in ex.inputs.items()}, 'output': encode_value(ex.output)}
		for ex in spec.examples]}


def decode_spec(domain, raw):
	"""
	Inverse of encode_spec
	"""
	if not isinstance(raw, dict) or not isinstance(raw.get('examples'), list):
		raise ParseError('a spec is an object with an examples list')
	examples = []
	for ex in raw['examples']:
		if not isinstance(ex, dict) or sorted(ex) != ['inputs', 'output']:
			raise ParseError('an example carries exactly inputs and output, got %r' % (ex,))
		if not isinstance(ex['inputs'], dict):
			raise ParseError('example inputs must be an object')
		inputs = {name: decode_value(v) for name, v in ex['inputs'].items()}
		examples.append(Example(inputs, decode_value(ex['output'])))
	return IOSpec(domain, tuple(examples))


def decode_value(raw):
	"""
	Inverse of encode_value. Rejects booleans, floats and nested lists
	"""
	if isinstance(raw, bool):
		raise ParseError('boolean is not a value: %r' % (raw,))
	if isinstance(raw, list):
		if not all(isinstance(x, int) and not isinstance(x, bool) for x in raw):
			raise ParseError('integer list expected, got %r' % (raw,))
		return check_value(tuple(raw))
	if isinstance(raw, (str, int)):
		return check_value(raw)
	raise ParseError('unsupported value %r' % (raw,))


def dump_line(record):
	# sorted keys keep files byte-identical across runs
	return json.dumps(record, sort_keys=True, ensure_ascii=False) + '\n'


def read_records(path, fields):
	"""
	Reads a JSON-lines file and yields (line number, record).
	fields is the exact set of keys each record must carry
	"""
	with open(path, encoding='utf-8') as f:
		for number, line in enumerate(f, 1):
			if not line.strip():
				continue
			try:
				record = json.loads(line)
			except json.JSONDecodeError as e:
				raise ParseError('%s:%d: malformed record (%s)' % (path, number, e.msg), line=number)
			if not isinstance(record, dict):
				raise ParseError('%s:%d: record must be an object' % (path, number), line=number)
			unknown = sorted(set(record) - set(fields))
			if unknown:
				raise ParseError('%s:%d: unknown field %r' % (path, number, unknown[0]), line=number)
			missing = sorted(set(fields) - set(record))
			if missing:
				raise ParseError('%s:%d: missing field %r' % (path, number, missing[0]), line=number)
			yield number, record


def drop_partial_line(path):
	"""
	Truncates a JSON-lines file back to its last newline. Returns the number
	of bytes dropped
	"""
	with open(path, 'rb+') as f:
		data = f.read()
		if not data or data.endswith(b'\n'):
			return 0
		keep = data.rfind(b'\n') + 1
		f.truncate(keep)
	logger.warning('%s: dropped %d bytes of an unfinished last line', path, len(data) - keep)
	return len(data) - keep


def mean_std(values):
	"""
	Returns (mean, std) of a sequence, (0, 0) when empty
	"""
	if len(values) == 0:
		return 0.0, 0.0
	values = np.asarray(values, dtype=float)
	return float(np.mean(values)), float(np.std(values))


def confidence95(values):
	"""
	Half-width of the 95% Student-t interval of the mean
	"""
	if len(values) < 2:
		return 0.0
	values = np.asarray(values, dtype=float)
	sem = np.std(values, ddof=1) / np.sqrt(len(values))
	return float(stats.t.ppf(0.975, len(values) - 1) * sem)
