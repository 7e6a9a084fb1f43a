from __future__ import absolute_import

from typing import Any, Dict, Optional

import os

from vdpchain.lib.config import get_setting
from vdpchain.lib.management import VdpCommand
from vdpchain.lib.metrics import write_timeseries
from vdpchain.lib.sim import run_experiment

def sibling_path(out, suffix):
    # type: (str, str) -> str
    root, ext = os.path.splitext(out)
    return root + suffix

class Command(VdpCommand):
    help = """Run a simulation experiment.

`experiment` picks what runs: backbone (the event-loop simulator, the
default), bfs_tail, long_range or multi_fork_economics.  A backbone run
writes its metrics JSON to --out, the time series next to it as .csv
and, with record_events, the event log as .events.ndjson."""

    def run(self, config, options):
        # type: (Dict[str, Any], Dict[str, Any]) -> int
        jobs = options['jobs'] or config.get('jobs') or get_setting('SIM_JOBS')
        result = run_experiment(config, jobs=int(jobs))
        out = options['out']  # type: Optional[str]
        if 'report' in result:
            report, log = result['report'], result['log']
            self.emit(report.to_dict(), out)
            if out is not None:
                write_timeseries(report, sibling_path(out, '.csv'))
                if log.enabled:
                    log.write_ndjson(sibling_path(out, '.events.ndjson'))
        elif 'reports' in result:
            self.emit({'experiment': result['experiment'], 'config': result['config'],
                       'summary': result['summary'],
                       'reports': [r.to_dict() for r in result['reports']]}, out)
        else:
            self.emit(result, out)
        return 0
