"""Performance testing package.

Contains performance profiling, benchmarking, and scalability tests
for identifying bottlenecks and tracking performance metrics.
"""
