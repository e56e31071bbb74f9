from setuptools import setup, find_packages

setup(
    name="TimeChangeToolkit",
    version="0.1.0",
    description="Cocycles, graph foliations, su-path functionals and bunching rates for time changes of the "
                "cat-map suspension flow",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
    ],
    packages=find_packages(exclude=["test", "results"]),
    py_modules=["main"],
    python_requires=">=3.9",
)
