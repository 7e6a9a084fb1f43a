from __future__ import absolute_import

from typing import Any, Dict

from vdpchain.exceptions import CheckFailed, ConfigError, JsonableError
from vdpchain.lib import vdp
from vdpchain.lib.management import VdpCommand
from vdpchain.lib.utils import reject

class Command(VdpCommand):
    help = """Verify a solution file written by puzzle-solve.  Exits 1 with
the rejection reason when the solution does not verify."""

    def run(self, config, options):
        # type: (Dict[str, Any], Dict[str, Any]) -> int
        try:
            params = vdp.PuzzleParams.from_dict(config['params'])
            instance = vdp.PuzzleInstance.from_dict(config['instance'])
        except (KeyError, ValueError, TypeError) as e:
            raise ConfigError('malformed solution file: %s' % (e,))
        try:
            solution = vdp.PuzzleSolution.from_dict(config['solution'])
        except (KeyError, ValueError, TypeError):
            verdict = reject('malformed_solution')
        else:
            try:
                verdict = vdp.verify_solution(instance, solution, params)
            except JsonableError:
                verdict = reject('malformed_solution')
        self.emit(verdict.to_dict(), options['out'])
        if not verdict:
            raise CheckFailed('solution rejected: %s' % (verdict.reason,), code=verdict.reason)
        return 0
