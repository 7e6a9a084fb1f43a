from __future__ import absolute_import

from fractions import Fraction

import os
import tempfile

import ujson

from vdpchain.exceptions import ConfigError
from vdpchain.lib.config import (
    apply_overrides, dump_json, format_fraction, load_config, load_json_config,
    parse_fraction, validate_config,
)
from vdpchain.lib.test_helpers import VdpTestCase
from vdpchain.lib.validator import check_dict, check_int

class FractionTest(VdpTestCase):
    def test_parse_fraction(self):
        # type: () -> None
        self.assertEqual(parse_fraction('1/20'), Fraction(1, 20))
        self.assertEqual(parse_fraction(' 3 / 4'), Fraction(3, 4))
        self.assertEqual(parse_fraction('0.25'), Fraction(1, 4))
        self.assertEqual(parse_fraction(0.7), Fraction(7, 10))
        self.assertEqual(parse_fraction(0.7) + parse_fraction(0.3), 1)
        self.assertEqual(parse_fraction(3), Fraction(3))
        self.assertEqual(parse_fraction(Fraction(2, 3)), Fraction(2, 3))

    def test_parse_fraction_errors(self):
        # type: () -> None
        for bad in ['1/0', 'one half', True, None]:
            with self.assertRaises(ConfigError):
                parse_fraction(bad, 'gamma')

    def test_format_fraction(self):
        # type: () -> None
        self.assertEqual(format_fraction(Fraction(1, 20)), '1/20')
        self.assertEqual(format_fraction(Fraction(4, 2)), '2')

class OverrideTest(VdpTestCase):
    def setUp(self):
        # type: () -> None
        self.config = {
            'gamma': '1/20',
            'validators': [{'stake_fraction': '1/2', 'honest': True},
                           {'stake_fraction': '1/2', 'honest': True}],
            'adversary': None,
        }

    def test_scalar_and_nested_overrides(self):
        # type: () -> None
        result = apply_overrides(self.config, ['gamma=1/10', 'validators.1.honest=false',
                                               'duration=500', 'mode=fast'])
        self.assertEqual(result['gamma'], '1/10')
        self.assertIs(result['validators'][1]['honest'], False)
        self.assertEqual(result['duration'], 500)
        self.assertEqual(result['mode'], 'fast')
        # The input is left alone.
        self.assertIs(self.config['validators'][1]['honest'], True)

    def test_override_creates_missing_levels(self):
        # type: () -> None
        result = apply_overrides(self.config, ['adversary.kind=bfs_private_tree',
                                               'adversary.branching_factor=4'])
        self.assertEqual(result['adversary'], {'kind': 'bfs_private_tree',
                                               'branching_factor': 4})

    def test_json_values(self):
        # type: () -> None
        result = apply_overrides({}, ['depths=[50000, "inf"]', 'label="x=y"'])
        self.assertEqual(result['depths'], [50000, 'inf'])
        self.assertEqual(result['label'], 'x=y')

    def test_bad_overrides(self):
        # type: () -> None
        for bad in ['gamma', '=3', 'validators.7.honest=true', 'validators.x=1']:
            with self.assertRaises(ConfigError):
                apply_overrides(self.config, [bad])

class LoadConfigTest(VdpTestCase):
    def write(self, text):
        # type: (str) -> str
        fd, path = tempfile.mkstemp(suffix='.json')
        with os.fdopen(fd, 'w') as f:
            f.write(text)
        self.paths.append(path)
        return path

    def setUp(self):
        # type: () -> None
        self.paths = []  # type: list

    def tearDown(self):
        # type: () -> None
        for path in self.paths:
            os.unlink(path)

    def test_layering(self):
        # type: () -> None
        path = self.write(ujson.dumps({'duration': 100, 'rng_seed': 4}))
        config = load_config(path, ['rng_seed=9'], defaults={'duration': 10, 'mode': 'fast'})
        self.assertEqual(config, {'duration': 100, 'rng_seed': 9, 'mode': 'fast'})

    def test_fixture_loads(self):
        # type: () -> None
        config = load_json_config(self.fixture_path('econ_two_forks.json'))
        self.assertEqual(len(config['scenario']['forks']), 2)

    def test_errors(self):
        # type: () -> None
        with self.assertRaises(ConfigError):
            load_json_config('/nonexistent/config.json')
        with self.assertRaises(ConfigError):
            load_json_config(self.write('{"unterminated": '))
        with self.assertRaises(ConfigError):
            load_json_config(self.write('[1, 2, 3]'))

    def test_validate_config(self):
        # type: () -> None
        validator = check_dict([('duration', check_int)])
        validate_config({'duration': 3}, validator)
        with self.assertRaisesRegex(ConfigError, 'duration key is missing'):
            validate_config({}, validator)

    def test_dump_json_is_stable(self):
        # type: () -> None
        text = dump_json({'b': 1, 'a': {'d': 'x/y', 'c': [1, 2]}})
        self.assertLess(text.index('"a"'), text.index('"b"'))
        self.assertIn('x/y', text)
        self.assertEqual(ujson.loads(text), {'b': 1, 'a': {'d': 'x/y', 'c': [1, 2]}})
