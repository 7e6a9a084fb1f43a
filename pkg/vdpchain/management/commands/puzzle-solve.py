from __future__ import absolute_import

from typing import Any, Dict

from argparse import ArgumentParser

from vdpchain.exceptions import ConfigError
from vdpchain.lib import vdp
from vdpchain.lib.config import validate_config
from vdpchain.lib.management import VdpCommand
from vdpchain.lib.validator import check_dict, check_hex, check_int, check_range

check_solve_config = check_dict([('input_r', check_hex)],
                                [('params', check_dict([])),
                                 ('budget', check_range(check_int, 1))])

class Command(VdpCommand):
    help = """Solve one puzzle and write the instance, its solution and the
parameters it was solved under, ready for puzzle-verify.

The config holds `input_r` (hex), optional `params` (gamma, vdf) and an
optional step `budget`."""

    def add_arguments(self, parser):
        # type: (ArgumentParser) -> None
        super(Command, self).add_arguments(parser)
        parser.add_argument('--input',
                            dest='input_r',
                            default=None,
                            help='Puzzle input as hex; overrides the config.')

    def run(self, config, options):
        # type: (Dict[str, Any], Dict[str, Any]) -> int
        if options.get('input_r') is not None:
            config['input_r'] = options['input_r']
        validate_config(config, check_solve_config, 'puzzle config')
        if 'params' in config:
            params = vdp.PuzzleParams.from_dict(config['params'])
        else:
            params = vdp.default_puzzle_params()
        try:
            input_r = bytes.fromhex(config['input_r'])
        except ValueError:
            raise ConfigError('input_r is not valid hex')
        instance = vdp.make_instance(input_r, params)
        solution = vdp.solve(instance, params, budget=config.get('budget'))
        self.emit({'params': params.to_dict(), 'instance': instance.to_dict(),
                   'solution': solution.to_dict()}, options['out'])
        return 0
