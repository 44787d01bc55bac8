"""
Session with an external model process speaking line-delimited JSON over
its standard streams. One request is in flight per session.

Request:  {"kind": "subgoal"|"synthesize", "domain", "spec", "beam", "request_id"}
Response: {"request_id", "subgoals": [[value, ...], ...]} or {"request_id", "programs": [text, ...]}
"""
import collections
import json
import logging
import shlex
import subprocess
import threading
import time
from queue import Empty, Queue

import constants as const
from core import BudgetExhausted, ProtocolError
from helper import encode_spec

logger = logging.getLogger(__name__)

_CLOSED = object()


class ModelSession:

	def __init__(self, command, timeout=const.ADAPTER_TIMEOUT):
		if isinstance(command, str):
			command = shlex.split(command)
		self.command = list(command)
		self.timeout = timeout
		try:
			self._proc = subprocess.Popen(
				self.command,
				stdin=subprocess.PIPE,
				stdout=subprocess.PIPE,
				stderr=subprocess.PIPE,
				text=True,
				encoding='utf-8',
				bufsize=1,
			)
		except OSError as e:
			raise ProtocolError('cannot start model %r: %s' % (' '.join(self.command), e)) from None
		logger.info('started model process %d: %s', self._proc.pid, ' '.join(self.command))
		self._next_id = 1
		self._lock = threading.Lock()
		self._lines = Queue()
		self._stderr = collections.deque(maxlen=20)
		threading.Thread(target=self._read_loop, daemon=True).start()
		threading.Thread(target=self._read_stderr_loop, daemon=True).start()

	def _read_loop(self):
		try:
			for line in self._proc.stdout:
				if line.strip():
					self._lines.put(line)
		finally:
			self._lines.put(_CLOSED)

	def _read_stderr_loop(self):
		for line in self._proc.stderr:
			self._stderr.append(line.rstrip())

	def _stderr_summary(self):
		return ' | '.join(self._stderr) or '<no stderr>'

	def request(self, kind, spec, beam):
		"""
		Sends one request and returns the decoded response object
		"""
		with self._lock:
			request_id = self._next_id
			self._next_id += 1
			message = {'kind': kind, 'domain': spec.domain.value, 'spec': encode_spec(spec),
				'beam': beam, 'request_id': request_id}
			try:
				self._proc.stdin.write(json.dumps(message, ensure_ascii=False) + '\n')
				self._proc.stdin.flush()
			except (BrokenPipeError, ValueError):
				raise ProtocolError('model process is gone (%s)' % self._stderr_summary()) from None
			deadline = time.monotonic() + self.timeout
			while True:
				try:
					line = self._lines.get(timeout=max(deadline - time.monotonic(), 0))
				except Empty:
					raise BudgetExhausted('no %s response within %.1fs' % (kind, self.timeout)) from None
				if line is _CLOSED:
					self._lines.put(_CLOSED)
					raise ProtocolError('model closed its output (%s)' % self._stderr_summary())
				try:
					response = json.loads(line)
				except json.JSONDecodeError as e:
					raise ProtocolError('malformed response: %s' % e.msg) from None
				if not isinstance(response, dict):
					raise ProtocolError('response must be an object')
				echoed = response.get('request_id')
				# late answer to a request that already timed out
				if isinstance(echoed, int) and not isinstance(echoed, bool) and echoed < request_id:
					logger.warning('discarding stale response %d', echoed)
					continue
				if echoed != request_id:
					raise ProtocolError('response does not echo request_id %d' % request_id)
				return response

	def synthesize(self, spec, beam):
		programs = self.request('synthesize', spec, beam).get('programs')
		if not isinstance(programs, list) or not all(isinstance(p, str) for p in programs):
			raise ProtocolError('"programs" must be a list of strings')
		return programs

	def subgoals(self, spec, beam):
		subgoals = self.request('subgoal', spec, beam).get('subgoals')
		if not isinstance(subgoals, list) or not all(isinstance(s, list) for s in subgoals):
			raise ProtocolError('"subgoals" must be a list of lists')
		return subgoals

	def close(self):
		if self._proc.poll() is None:
			try:
				self._proc.stdin.close()
				self._proc.wait(timeout=3)
			except (OSError, subprocess.TimeoutExpired):
				self._proc.kill()
		logger.info('model process %d exited with %s', self._proc.pid, self._proc.returncode)

	def __enter__(self):
		return self

	def __exit__(self, *exc):
		self.close()
