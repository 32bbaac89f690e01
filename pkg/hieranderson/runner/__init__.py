from .experiment import ExperimentConfig
from .records import ResultRecord, RecordWriter, read_records, build_summary
from .tasks import TaskResult, TASKS, run_task
