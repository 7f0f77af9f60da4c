# Command orchestration
