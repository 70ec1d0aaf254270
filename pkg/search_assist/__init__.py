"""
Search Assistance Engine
Real-time related-query suggestions and spelling corrections mined from
a query stream and a tweet stream, published as atomic snapshots.
"""

__version__ = "1.0.0"
__author__ = "Search Assistance Team"
