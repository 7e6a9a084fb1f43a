from __future__ import absolute_import

from typing import Any, Dict

import pandas as pd
import ujson

from vdpchain.exceptions import ConfigError
from vdpchain.lib.bounds import bound_table
from vdpchain.lib.management import VdpCommand

class Command(VdpCommand):
    help = """Evaluate every bound the config has parameters for.

Writes the table as JSON, or as CSV when --out ends in .csv."""

    def run(self, config, options):
        # type: (Dict[str, Any], Dict[str, Any]) -> int
        rows = bound_table(config)
        out = options['out']
        if out is not None and out.endswith('.csv'):
            frame = pd.DataFrame([{'bound': r['bound'],
                                   'value': ujson.dumps(r['value'], sort_keys=True),
                                   'params': ujson.dumps(r['params'], sort_keys=True)}
                                  for r in rows], columns=['bound', 'value', 'params'])
            try:
                frame.to_csv(out, index=False)
            except IOError as e:
                raise ConfigError('cannot write %s: %s' % (out, e.strerror or e))
        else:
            self.emit(rows, out)
        return 0
