import pickle

import pytest

from core import (Domain, DslTypeError, ErrorKind, Example, IOSpec, RangeViolation, check_value, list_spec,
	string_spec, values_equal, variant)


def test_variants():
	assert variant('abc') == 'Text'
	assert variant(-4) == 'Int'
	assert variant((1, 2)) == 'IntList'
	with pytest.raises(DslTypeError):
		variant(True)
	with pytest.raises(DslTypeError):
		variant(1.5)


@pytest.mark.parametrize('value', [-256, 255, (), tuple(range(20)), 'x' * 100])
def test_values_at_the_bounds(value):
	assert check_value(value) == value


@pytest.mark.parametrize('value', [-257, 256, tuple(range(21)), (0, 300), 'x' * 101])
def test_values_out_of_bounds(value):
	with pytest.raises(RangeViolation) as e:
		check_value(value)
	assert e.value.kind is ErrorKind.RANGE_VIOLATION


def test_equality_respects_variants():
	assert values_equal((-2, -2, 1), (-2, -2, 1))
	assert not values_equal(1, (1,))
	assert not values_equal('1', 1)
	assert values_equal((), ())


def test_string_spec(names_spec):
	assert names_spec.domain is Domain.STRING
	assert len(names_spec.examples) == 4
	assert names_spec.outputs[0] == '1.TURING,Alan'


def test_with_outputs_keeps_inputs(names_spec):
	sub = names_spec.with_outputs(['1', '21', '8', '99'])
	assert [ex.inputs for ex in sub.examples] == [ex.inputs for ex in names_spec.examples]
	assert sub.outputs == ('1', '21', '8', '99')
	with pytest.raises(DslTypeError):
		names_spec.with_outputs(['1'])


def test_string_spec_rejects_numbers():
	with pytest.raises(DslTypeError):
		IOSpec(Domain.STRING, (Example({'input': 'a'}, 3),))


def test_list_spec_converts_lists(cummax_spec):
	assert cummax_spec.examples[0].inputs == {'x0': 1, 'x1': (-2, -25, 1)}
	assert cummax_spec.outputs == ((-2, -2, 1), (-28, -15))


def test_mixed_variants_rejected():
	# the integer in place of a list
	with pytest.raises(DslTypeError):
		list_spec([((1, [-2, -25, 1]), [-2, -2, 1]), ((5, -4), -4)])


def test_example_count_bounds():
	with pytest.raises(DslTypeError):
		string_spec([])
	with pytest.raises(DslTypeError):
		string_spec([('a', 'a')] * 9)


def test_list_inputs_are_numbered():
	with pytest.raises(DslTypeError):
		IOSpec(Domain.LIST, (Example({'x1': (1,)}, 1),))


def test_error_text_names_the_kind():
	assert str(RangeViolation('too big')) == 'RangeViolation: too big'


def test_examples_are_immutable(cummax_spec):
	source = {'input': 'ab'}
	ex = Example(source, 'a')
	source['input'] = 'zz'
	assert ex.inputs['input'] == 'ab'
	with pytest.raises(TypeError):
		cummax_spec.examples[0].inputs['x0'] = 2


def test_specs_hash_and_pickle(cummax_spec):
	same = Example({'x1': (-2, -25, 1), 'x0': 1}, (-2, -2, 1))
	assert cummax_spec.examples[0] == same
	assert hash(cummax_spec.examples[0]) == hash(same)
	assert len({cummax_spec, cummax_spec.with_outputs(cummax_spec.outputs)}) == 1
	assert pickle.loads(pickle.dumps(cummax_spec)) == cummax_spec
