import pytest

from benchgen import task_from_program
from core import list_spec, string_spec
from list_dsl import parse_list_program
from string_dsl import parse_string_program

NAMES = [
	('alan Turing1', '1.TURING,Alan'),
	('21.Donald@knuTh', '21.KNUTH,Donald'),
	('8:grace,HoppeR&', '8.HOPPER,Grace'),
	('EDSGER99 DIJKSTRA', '99.DIJKSTRA,Edsger'),
]
NAMES_PROGRAM = ("GetAll(NUMBER) | Const('.') | Compose(ToCase(ALL_CAPS), GetToken(WORD, -1)) | "
	"Const(',') | Compose(ToCase(PROPER), GetToken(WORD, 1))")

CUMMAX = [
	((1, [-2, -25, 1]), [-2, -2, 1]),
	((2, [-28, -15]), [-28, -15]),
]
CUMMAX_PROGRAM = 'x0 = INPUT | x1 = INPUT | x2 = Scanl1 (max) x1'
DETOUR_PROGRAM = ('x0 = INPUT | x1 = INPUT | x2 = Sort x1 | x3 = Scanl1 (-) x2 | x4 = Scanl1 (-) x3 | '
	'x5 = Zip (min) x1 x4 | x6 = Zip (max) x1 x5 | x7 = Zip (max) x2 x6')


@pytest.fixture
def names_spec():
	return string_spec(NAMES)


@pytest.fixture
def names_program():
	return parse_string_program(NAMES_PROGRAM)


@pytest.fixture
def names_task(names_spec, names_program):
	return task_from_program('names', names_spec, names_program)


@pytest.fixture
def cummax_spec():
	return list_spec(CUMMAX)


@pytest.fixture
def cummax_program():
	return parse_list_program(CUMMAX_PROGRAM)


@pytest.fixture
def cummax_task(cummax_spec, cummax_program):
	return task_from_program('cummax', cummax_spec, cummax_program)
