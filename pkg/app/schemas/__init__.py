# Pydantic schemas for case files, run configuration and reports
