import logging
import os
import tempfile
import unittest

from cardy_lab.config import LoggingConfig
from cardy_lab.logs import ExperimentLogger, LabLogger, configure_logging, LOGGER_NAME
from cardy_lab.models.exceptions import StatisticalFloor, WorkerFailure


class Test_Lab_Logger(unittest.TestCase):

    def setUp(self):
        self.config = LoggingConfig(
            console=LoggingConfig.HandlerConfig(level="debug", use=False),
            file=LoggingConfig.HandlerConfig(level="debug", use=False),
        )
        configure_logging("Cardy Lab", self.config)

    def test_lab_messages_are_marked(self):
        logger = LabLogger(LOGGER_NAME)
        with self.assertLogs(logger.logger, level="DEBUG") as cm:
            logger.debug("debug message")
        self.assertIn("(lab)", cm.output[0])
        self.assertIn("debug message", cm.output[0])

    def test_experiment_messages_carry_their_context(self):
        logger = ExperimentLogger(LOGGER_NAME)
        with self.assertLogs(logger.logger, level="INFO") as cm:
            logger.info("estimate", "crossing delta=0.125")
            logger.info("estimate", "")
        self.assertIn("(crossing delta=0.125)", cm.output[0])
        self.assertIn("(no experiment)", cm.output[1])

    def test_statistical_floor_is_logged_as_warning(self):
        logger = ExperimentLogger(LOGGER_NAME)
        with self.assertLogs(logger.logger, level="DEBUG") as cm:
            logger.log_on_exception(StatisticalFloor("unresolved"), "crossing")
            logger.log_on_exception(WorkerFailure("trial failed"), "crossing")
        self.assertTrue(cm.output[0].startswith("WARNING"))
        self.assertTrue(cm.output[1].startswith("ERROR"))

    def test_configuring_again_replaces_the_handlers(self):
        config = LoggingConfig(
            console=LoggingConfig.HandlerConfig(level="info", use=True),
            file=LoggingConfig.HandlerConfig(level="debug", use=False),
        )
        configure_logging("Cardy Lab", config)
        configure_logging("Cardy Lab", config)
        self.assertEqual(len(logging.getLogger(LOGGER_NAME).handlers), 1)
        configure_logging("Cardy Lab", self.config)
        self.assertEqual(len(logging.getLogger(LOGGER_NAME).handlers), 0)

    def test_file_logging_creates_the_log_directory(self):
        with tempfile.TemporaryDirectory() as directory:
            path = os.path.join(directory, "log")
            config = LoggingConfig(
                console=LoggingConfig.HandlerConfig(level="info", use=False),
                file=LoggingConfig.HandlerConfig(level="debug", use=True, path=path),
            )
            configure_logging("Cardy Lab", config)
            LabLogger(LOGGER_NAME).info("to the file")
            configure_logging("Cardy Lab", self.config)
            self.assertTrue(os.path.isfile(os.path.join(path, "cardy_lab.log")))

    def test_file_logging_without_a_path_is_rejected(self):
        config = LoggingConfig(
            console=LoggingConfig.HandlerConfig(level="info", use=False),
            file=LoggingConfig.HandlerConfig(level="debug", use=True),
        )
        with self.assertRaises(ValueError):
            configure_logging("Cardy Lab", config)

    def tearDown(self):
        configure_logging("Cardy Lab", self.config)


if __name__ == "__main__":  # pragma: no cover
    unittest.main()
