# Pydantic schemas for reports and scenario files
