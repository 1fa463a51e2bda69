from typing import List

from setuptools import setup, find_packages

with open('README.md') as f:
    readme = f.read()

with open('LICENSE.md') as f:
    project_license = f.read()


def get_deps_from_file(file: str) -> List[str]:
    deps = []
    with open(file) as fh:
        for dep in fh.read().splitlines():
            if dep.startswith("-r"):
                deps.extend(get_deps_from_file(dep.split(" ")[1]))
            elif dep and not dep.startswith("#"):
                deps.append(dep)
    return deps


REQUIRED_DEPENDENCIES = get_deps_from_file('requirements.txt')
TEST_DEPENDENCIES = get_deps_from_file('test_requirements.txt')
setup(
    name='navsecure',
    version='0.1.0',
    description='Safe autonomous driving from a learned world model: imagination-trained actor-critic with a '
                'cost budget, a 2D driving simulator and intervention-based evaluation.',
    long_description=readme,
    license=project_license,
    packages=find_packages(exclude=['tests', 'tests.*']),
    package_data={'navsecure': ['config.json']},
    install_requires=REQUIRED_DEPENDENCIES,
    extras_require={'test': TEST_DEPENDENCIES},
    entry_points={
        'console_scripts': ['navsecure = navsecure.__main__:console_entry']
    }
)
