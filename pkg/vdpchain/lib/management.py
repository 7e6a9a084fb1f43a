from __future__ import absolute_import
from __future__ import print_function

from typing import Any, Dict, Optional

from argparse import ArgumentParser
from django.core.management.base import BaseCommand

import logging
import sys
import ujson

from vdpchain.exceptions import ConfigError, JsonableError
from vdpchain.lib.config import dump_json, load_config

logger = logging.getLogger('vdpchain.management')

class VdpCommand(BaseCommand):
    """
    Shared flags and error handling for the workbench commands.

    Subclasses implement `run(config, options)` and return the exit
    status.  A JsonableError escaping `run` is written to stderr as a JSON
    object and becomes the exit status it carries (2 for config and I/O
    trouble, 1 for a failed check).
    """
    config_required = True

    def add_arguments(self, parser):
        # type: (ArgumentParser) -> None
        parser.add_argument('--config',
                            dest='config',
                            action='store',
                            default=None,
                            help='JSON config file.')
        parser.add_argument('--out',
                            dest='out',
                            action='store',
                            default=None,
                            help='Where to write the output (default: stdout).')
        parser.add_argument('--seed',
                            dest='seed',
                            type=int,
                            default=None,
                            help='Overrides the config rng_seed.')
        parser.add_argument('--jobs',
                            dest='jobs',
                            type=int,
                            default=None,
                            help='Worker processes for independent trials.')
        parser.add_argument('--override',
                            dest='overrides',
                            action='append',
                            default=[],
                            help='key.path=value; may be repeated.')
        parser.add_argument('--mode',
                            dest='mode',
                            choices=['real', 'fast'],
                            default=None,
                            help='Simulator mode.')

    def load(self, options, defaults=None):
        # type: (Dict[str, Any], Optional[Dict[str, Any]]) -> Dict[str, Any]
        if self.config_required and options['config'] is None:
            raise ConfigError('--config is required')
        config = load_config(options['config'], options['overrides'], defaults)
        if options['seed'] is not None:
            config['rng_seed'] = options['seed']
        if options['mode'] is not None:
            config['mode'] = options['mode']
        return config

    def emit(self, data, out):
        # type: (Any, Optional[str]) -> None
        text = dump_json(data)
        if out is None:
            self.stdout.write(text)
            return
        try:
            with open(out, 'w') as f:
                f.write(text)
                f.write('\n')
        except IOError as e:
            raise ConfigError('cannot write %s: %s' % (out, e.strerror or e))
        logger.info('wrote %s', out)

    def run(self, config, options):
        # type: (Dict[str, Any], Dict[str, Any]) -> int
        raise NotImplementedError

    def handle(self, *args, **options):
        # type: (*Any, **Any) -> None
        try:
            status = self.run(self.load(options), options)
        except JsonableError as e:
            logger.info('%s failed: %s', self.__module__.split('.')[-1], e.error)
            self.stderr.write(ujson.dumps(e.to_dict(), sort_keys=True))
            sys.exit(e.exit_status)
        if status:
            sys.exit(status)
