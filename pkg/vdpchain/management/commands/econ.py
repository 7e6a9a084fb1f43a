from __future__ import absolute_import

from typing import Any, Dict

import pandas as pd

from vdpchain.lib import econ
from vdpchain.lib.management import VdpCommand

class Command(VdpCommand):
    help = """Print the expected reward of every forking strategy for a
scenario, and the strategy to play.  --out also writes the rows as JSON."""

    def run(self, config, options):
        # type: (Dict[str, Any], Dict[str, Any]) -> int
        scenario = econ.ForkScenario.from_dict(config.get('scenario', config))
        rows = econ.strategy_table(scenario)
        best = econ.best_strategy(scenario)
        recommendation = (econ.ALL_FORKS if best.kind == econ.ALL_FORKS
                          else 'single(%d)' % (best.index,))
        frame = pd.DataFrame(rows, columns=['strategy', 'value', 'value_over_R', 'raw_value',
                                            'best'])
        self.stdout.write(frame.to_string(index=False))
        self.stdout.write('recommendation: %s' % (recommendation,))
        if options['out'] is not None:
            self.emit({'scenario': scenario.to_dict(), 'rows': rows,
                       'recommendation': recommendation}, options['out'])
        return 0
