import string

# value bounds
INT_MIN = -256
INT_MAX = 255
MAX_LIST_LENGTH = 20
MAX_TEXT_LENGTH = 100
MAX_EXAMPLES = 8

# the string domain binds its single text input under this name
STRING_INPUT = 'input'

DELIMITERS = '&,.?!@()[]%#$"´ '
CHARACTERS = string.ascii_letters + string.digits + DELIMITERS

MAX_POSITION = 100
INDICES = (-5, -4, -3, -2, -1, 1, 2, 3, 4, 5)

# default budget
INNER_K = 10
OUTER_T = 10
STEP_LIMIT = 10
BEAM = 10
NODE_CAP = 5 * 10**6

# benchgen
RESAMPLE_CAP = 10000
# draws under one program plan (length and slot families) before a new plan
PLAN_ATTEMPTS = 200
INPUT_RETRIES = 25
STRING_EXAMPLES = 4
LIST_EXAMPLES = 3
LIST_INPUT_LENGTH = (3, 8)
LIST_ELEMENT_RANGE = (-30, 30)
INT_INPUT_RANGE = (0, 8)
SECOND_INPUT_PROB = 0.3
SINGLE_OP_TRAIN_FRACTION = 0.25

ADAPTER_TIMEOUT = 30.0

DOMAINS = ('string', 'list')
SOLVERS = ('tiips', 'exedec', 'baseline')
SPLITS = ('train', 'test')

# the five generalization categories, in report column order
GENERALIZATION_CATEGORIES = (
	'length_generalization',
	'compose_different_concepts',
	'switch_concept_order',
	'compose_new_operation',
	'add_operation_functionality',
)
CATEGORIES = ('train_distribution',) + GENERALIZATION_CATEGORIES
