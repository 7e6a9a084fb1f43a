from __future__ import print_function

from collections import namedtuple
from typing import Any, Callable, Iterable, List

from django.test import SimpleTestCase
from django.test.runner import DiscoverRunner

import os
import subprocess
import sys
import time
import traceback
import unittest

# Seconds an unmarked test may take; marked tests get their own estimate.
DEFAULT_BUDGET = 0.5
# Multiplier on every budget for slow laptops and loaded CI boxes.
MACHINE_SLACK = 3.0

IMPORT_FAILURE_PREFIX = 'unittest.loader._FailedTest.'

Overrun = namedtuple('Overrun', ['name', 'delay', 'budget', 'reason'])

def slow(expected_run_time, slowness_reason):
    # type: (float, str) -> Callable[[Callable], Callable]
    '''
    Marks a test method as slow: a Monte Carlo run, a real-crypto
    simulation, anything that needs more than a fraction of a second.
    `expected_run_time` (seconds) becomes the test's time budget and
    FAST_TESTS_ONLY skips it.  Decorate the method, not the class.
    '''
    def decorator(f):
        # type: (Any) -> Any
        f.expected_run_time = expected_run_time
        f.slowness_reason = slowness_reason
        return f

    return decorator

def fast_tests_only():
    # type: () -> bool
    return "FAST_TESTS_ONLY" in os.environ

def full_test_name(test):
    # type: (SimpleTestCase) -> str
    return '%s.%s.%s' % (test.__module__, test.__class__.__name__, test._testMethodName)

def time_budget(test_method):
    # type: (Any) -> float
    if hasattr(test_method, "expected_run_time"):
        # 50% over the estimate.
        return 1.5 * test_method.expected_run_time * MACHINE_SLACK
    return DEFAULT_BUDGET * MACHINE_SLACK

def report_import_failure(test_name):
    # type: (str) -> None
    """The loader turns a module that fails to import into a dummy test;
    importing the module in a subprocess shows the real traceback."""
    module = test_name[len(IMPORT_FAILURE_PREFIX):]
    print()
    print("%s failed to import; importing it directly for a clearer traceback:" % (module,))
    command = [sys.executable, "-c", "import %s" % (module,)]
    print("Import test command: `%s`" % (' '.join(command),))
    try:
        subprocess.check_call(command)
    except subprocess.CalledProcessError:
        print("If that traceback is confusing, try the import inside `./manage.py shell`")
        print()
        return
    print("Import unexpectedly succeeded!  Something is wrong")

class Runner(DiscoverRunner):
    """
    Runs the backend tests one at a time with setUp/tearDown only.  The
    suite needs no database, so there is no database setup and no class
    fixtures.  After the run it lists the slow tests that were skipped and
    every test that overran its time budget.
    """

    def __init__(self, *args, **kwargs):
        # type: (*Any, **Any) -> None
        DiscoverRunner.__init__(self, *args, **kwargs)
        self.skipped_slow = []  # type: List[Overrun]
        self.overruns = []  # type: List[Overrun]
        self.tests_run = 0

    def run_test(self, test):
        # type: (SimpleTestCase) -> bool
        """Returns True if the test failed."""
        test_name = full_test_name(test)
        if test_name.startswith(IMPORT_FAILURE_PREFIX):
            report_import_failure(test_name)
            return True
        if not hasattr(test, "_pre_setup"):
            print("%s is not a SimpleTestCase; something is wrong." % (test_name,))
            return True

        test_method = getattr(test, test._testMethodName)
        reason = getattr(test_method, 'slowness_reason', None)
        if fast_tests_only() and reason is not None:
            self.skipped_slow.append(Overrun(test_name, 0.0, 0.0, reason))
            return False

        print('Running', test_name)
        failed = False
        test._pre_setup()
        start_time = time.time()
        test.setUp()
        try:
            test_method()
        except unittest.SkipTest as e:
            print('Skipped %s: %s' % (test_name, e))
        except Exception:
            failed = True
            traceback.print_exc()
        finally:
            test.tearDown()
        delay = time.time() - start_time
        test._post_teardown()

        self.tests_run += 1
        budget = time_budget(test_method)
        if delay > budget:
            print('Test is TOO slow: %s (%.3f s)' % (test_name, delay))
            self.overruns.append(Overrun(test_name, delay, budget, reason))
        return failed

    def run_suite(self, suite, fatal_errors=True):
        # type: (Iterable[SimpleTestCase], bool) -> bool
        failed = False
        for test in suite:
            if self.run_test(test):
                failed = True
                if fatal_errors:
                    break
        self.print_summary()
        return failed

    def print_summary(self):
        # type: () -> None
        print()
        print('Ran %d tests.' % (self.tests_run,))
        if self.skipped_slow:
            print('Skipped %d slow tests (FAST_TESTS_ONLY):' % (len(self.skipped_slow),))
            for skipped in self.skipped_slow:
                print('  %s: %s' % (skipped.name, skipped.reason))
        if self.overruns:
            print('Tests over their time budget:')
            for overrun in sorted(self.overruns, key=lambda o: -o.delay):
                print('  %s: %.3f s (budget %.3f s)' % (overrun.name, overrun.delay, overrun.budget))

    def run_tests(self, test_labels, **kwargs):
        # type: (List[str], **Any) -> bool
        self.setup_test_environment()
        try:
            suite = self.build_suite(test_labels)
        except AttributeError:
            traceback.print_exc()
            print()
            print("  This is often caused by a test module/class/function that doesn't exist or ")
            print("  import properly. You can usually debug in a `manage.py shell` via e.g. ")
            print("    import vdpchain.tests.test_chain")
            print("    from vdpchain.tests.test_chain import BlockTreeTest")
            print("    BlockTreeTest.test_fork_choice")
            print()
            sys.exit(1)
        failed = self.run_suite(suite, fatal_errors=kwargs.get('fatal_errors', True))
        self.teardown_test_environment()
        return failed
