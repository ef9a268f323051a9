# Core configuration and utilities


