"""
Stand-alone model process for the line-delimited JSON protocol of adapter.py.
Subgoal requests are answered from the ground truth of a task file, by
matching the request's state against each task's state chain; synthesize
requests are answered by the built-in enumerator.

	python oracle_server.py data/list_compose_new_operation_test.jsonl

--delay and --fault exist to exercise the client's timeout and validation paths.
"""
import argparse
import json
import logging
import sys
import time

from benchgen import read_dataset
from core import Domain, SynthError
from helper import decode_spec, encode_value
from inductive import enumerate_step
from transductive import OracleTransductiveModel

logger = logging.getLogger(__name__)

FAULTS = ('none', 'json', 'arity', 'request-id', 'exit')


class OracleServer:

	def __init__(self, tasks, fault='none', delay=0.0):
		self.oracles = [OracleTransductiveModel(task) for task in tasks]
		self.fault = fault
		self.delay = delay

	def subgoals(self, spec, beam):
		for oracle in self.oracles:
			if oracle.task.domain is spec.domain:
				predictions = oracle.predict_subgoals(spec, beam)
				if predictions:
					return [[encode_value(v) for v in p.outputs] for p in predictions]
		return []

	def programs(self, spec, beam):
		return [c.render() for c in enumerate_step(spec, beam)]

	def handle(self, message):
		spec = decode_spec(Domain(message['domain']), message['spec'])
		beam = int(message['beam'])
		response = {'request_id': message['request_id']}
		if message['kind'] == 'subgoal':
			response['subgoals'] = self.subgoals(spec, beam)
			if self.fault == 'arity':
				response['subgoals'] = [s[:-1] for s in response['subgoals']]
		else:
			response['programs'] = self.programs(spec, beam)
		if self.fault == 'request-id':
			response['request_id'] = message['request_id'] + 1000
		return response

	def serve(self, stdin, stdout):
		for line in stdin:
			if not line.strip():
				continue
			if self.fault == 'exit':
				return
			if self.delay:
				time.sleep(self.delay)
			if self.fault == 'json':
				stdout.write('{not json\n')
				stdout.flush()
				continue
			message = json.loads(line)
			try:
				response = self.handle(message)
			except (SynthError, KeyError, ValueError) as e:
				logger.warning('bad request: %s', e)
				response = {'request_id': message.get('request_id'), 'subgoals': [], 'programs': []}
			stdout.write(json.dumps(response, ensure_ascii=False) + '\n')
			stdout.flush()


def main(argv=None):
	parser = argparse.ArgumentParser(description=__doc__.splitlines()[1])
	parser.add_argument('tasks', nargs='*', help='task files providing ground-truth subgoals')
	parser.add_argument('--delay', type=float, default=0.0, help='seconds to wait before each answer')
	parser.add_argument('--fault', choices=FAULTS, default='none')
	args = parser.parse_args(argv)
	logging.basicConfig(level=logging.WARNING, stream=sys.stderr)
	tasks = []
	for path in args.tasks:
		tasks.extend(read_dataset(path))
	OracleServer(tasks, args.fault, args.delay).serve(sys.stdin, sys.stdout)
	return 0


if __name__ == '__main__':
	sys.exit(main())
