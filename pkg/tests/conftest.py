import os
import shutil
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))


def external_solver_command():
    """Configured SMT solver command, or None.

    Honors CAUSALSAT_SOLVER_CMD; otherwise picks up z3 or cvc5 from PATH.
    """
    cmd = os.environ.get("CAUSALSAT_SOLVER_CMD")
    if cmd:
        return cmd
    for name, args in (("z3", "z3"), ("cvc5", "cvc5 --produce-models")):
        if shutil.which(name):
            return args
    return None


@pytest.fixture(scope="session")
def solver_cmd():
    cmd = external_solver_command()
    if cmd is None:
        pytest.skip("SKIP: no external solver configured (set CAUSALSAT_SOLVER_CMD)")
    return cmd
