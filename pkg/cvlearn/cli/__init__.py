from .base import cli
from .validate import validate
from .prob import prob
from .make import make
from .sample import sample
from .learn import learn_state, learn_task
from .bound import bound
from .dims import dims
from .run import run, sweep
