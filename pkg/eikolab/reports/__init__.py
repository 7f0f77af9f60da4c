# Report records and writers
